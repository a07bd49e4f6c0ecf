#include <algorithm>
#include <cstring>
#include <sstream>

#include "polycomm/error.hpp"
#include "polycomm/rng.hpp"
#include "polycomm/scop.hpp"

namespace polycomm {

namespace {

Value zero_of(ElemType t) {
  switch (t) {
    case ElemType::Bool: return false;
    case ElemType::Int64: return std::int64_t{0};
    case ElemType::Float64: return 0.0;
  }
  return false;
}

std::size_t offset_of(const FieldDecl& d, std::span<const std::int64_t> index) {
  const Box b = d.index_box();
  if (index.size() != b.arity() || !b.contains(index))
    throw Error(ErrorKind::IndexOutOfBounds, "index " + to_string(index) + " outside field " + d.name);
  return static_cast<std::size_t>(b.rank(index));
}

}  // namespace

Value& FieldData::at(std::span<const std::int64_t> index) { return values[offset_of(decl, index)]; }
const Value& FieldData::at(std::span<const std::int64_t> index) const { return values[offset_of(decl, index)]; }

FieldData& FieldContents::field(std::string_view name) {
  for (auto& f : fields)
    if (f.decl.name == name) return f;
  throw Error(ErrorKind::ValidationError, "no contents for field '" + std::string(name) + "'");
}

const FieldData& FieldContents::field(std::string_view name) const {
  return const_cast<FieldContents*>(this)->field(name);
}

FieldContents FieldContents::zeros(const Scop& s) {
  FieldContents c;
  for (const auto& d : s.fields) c.fields.push_back({d, std::vector<Value>(d.size(), zero_of(d.type))});
  return c;
}

FieldContents FieldContents::random(const Scop& s, std::uint64_t seed) {
  SplitMix64 rng(seed);
  FieldContents c = zeros(s);
  for (auto& f : c.fields) {
    for (auto& v : f.values) {
      const std::uint64_t x = rng.next();
      switch (f.decl.type) {
        case ElemType::Bool: v = (x & 1) != 0; break;
        case ElemType::Int64: v = static_cast<std::int64_t>((x >> 33) % 100); break;
        case ElemType::Float64: v = static_cast<double>(x >> 11) * 0x1.0p-53; break;
      }
    }
  }
  return c;
}

std::string FieldContents::text() const {
  std::ostringstream out;
  for (const auto& f : fields) {
    out << "field " << f.decl.name << " " << to_string(f.decl.type);
    for (auto e : f.decl.extents) out << " " << e;
    out << "\n";
    const std::size_t row = f.decl.extents.empty() ? 1 : static_cast<std::size_t>(f.decl.extents.back());
    for (std::size_t k = 0; k < f.values.size(); ++k) {
      out << value_text(f.values[k]);
      out << ((k + 1) % row == 0 ? "\n" : " ");
    }
  }
  return out.str();
}

FieldContents FieldContents::parse(std::string_view text, const Scop& s) {
  FieldContents c = zeros(s);
  std::istringstream in{std::string(text)};
  std::string word;
  std::vector<bool> seen(c.fields.size(), false);
  while (in >> word) {
    if (word != "field") throw Error(ErrorKind::ParseError, "field contents: expected 'field', got '" + word + "'");
    std::string name, type;
    in >> name >> type;
    FieldData& f = c.field(name);
    seen[static_cast<std::size_t>(&f - c.fields.data())] = true;
    if (type != to_string(f.decl.type))
      throw Error(ErrorKind::ValidationError, "field contents: " + name + " has type " + type);
    for (auto e : f.decl.extents) {
      std::int64_t got = 0;
      if (!(in >> got) || got != e) throw Error(ErrorKind::ValidationError, "field contents: extents of " + name);
    }
    for (auto& v : f.values) {
      if (!(in >> word)) throw Error(ErrorKind::ParseError, "field contents: " + name + " is truncated");
      try {
        switch (f.decl.type) {
          case ElemType::Bool:
            if (word != "0" && word != "1") throw std::invalid_argument(word);
            v = word == "1";
            break;
          case ElemType::Int64: v = static_cast<std::int64_t>(std::stoll(word)); break;
          case ElemType::Float64: v = std::stod(word); break;
        }
      } catch (const std::logic_error&) {
        throw Error(ErrorKind::ParseError, "field contents: bad value '" + word + "' in " + name);
      }
    }
  }
  for (std::size_t k = 0; k < seen.size(); ++k)
    if (!seen[k]) throw Error(ErrorKind::ValidationError, "field contents: missing field " + c.fields[k].decl.name);
  return c;
}

std::string Divergence::describe() const {
  return "field " + field + " index " + to_string(index) + ": expected " + value_text(expected) + ", got " +
         value_text(got);
}

std::optional<Divergence> first_divergence(const FieldContents& expected, const FieldContents& got) {
  for (const auto& f : expected.fields) {
    const FieldData& g = got.field(f.decl.name);
    const Box b = f.decl.index_box();
    Point p = b.lo;
    for (std::size_t k = 0; k < f.values.size(); ++k) {
      if (!bit_equal(f.values[k], g.values[k])) return Divergence{f.decl.name, p, f.values[k], g.values[k]};
      for (std::size_t d = p.size(); d-- > 0;) {
        if (p[d] < b.hi[d]) {
          ++p[d];
          break;
        }
        p[d] = b.lo[d];
      }
    }
  }
  return std::nullopt;
}

std::vector<Instance> schedule_order(const Scop& s) {
  std::vector<Instance> out;
  for (std::size_t k = 0; k < s.statements.size(); ++k)
    for (auto& p : s.statements[k].domain.enumerate()) {
      Point t = s.statements[k].time(p);
      out.push_back({k, std::move(p), std::move(t)});
    }
  std::sort(out.begin(), out.end(), [](const Instance& a, const Instance& b) { return a.time < b.time; });
  return out;
}

FieldContents sequential_execute(const Scop& s, const FieldContents& init) {
  FieldContents mem = init;
  ScalarEnv scalars;
  for (const auto& inst : schedule_order(s)) {
    const Statement& st = s.statements[inst.stmt];
    auto read = [&](std::size_t k) -> Value {
      const AccessRef& a = st.accesses.at(k);
      return mem.field(a.field).at(a.element(inst.point));
    };
    for (const auto& act : st.body) {
      Value v = evaluate(act.value, s, scalars, read);
      if (act.kind == Action::Kind::Let) {
        scalars[act.target] = v;
      } else {
        const AccessRef& a = st.accesses.at(act.access);
        FieldData& f = mem.field(a.field);
        f.at(a.element(inst.point)) = convert(v, f.decl.type);
      }
    }
  }
  return mem;
}

}  // namespace polycomm

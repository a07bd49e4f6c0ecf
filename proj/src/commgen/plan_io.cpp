#include <charconv>
#include <map>
#include <sstream>

#include "polycomm/commgen.hpp"
#include "polycomm/error.hpp"

namespace polycomm {

namespace {

std::string ref_text(const BufferRef& r) { return std::to_string(r.channel) + "@" + std::to_string(r.rank); }

[[noreturn]] void bad(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::ParseError, "plan line " + std::to_string(line) + ": " + what);
}

std::int64_t parse_int(std::string_view t, std::size_t line) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) bad(line, "bad integer '" + std::string(t) + "'");
  return v;
}

std::size_t parse_index(std::string_view t, std::size_t line) {
  const std::int64_t v = parse_int(t, line);
  if (v < 0) bad(line, "negative index");
  return static_cast<std::size_t>(v);
}

Point parse_point(std::string_view t, std::size_t line) {
  if (t.size() < 2 || t.front() != '(' || t.back() != ')') bad(line, "bad tuple '" + std::string(t) + "'");
  Point p;
  t = t.substr(1, t.size() - 2);
  if (t.empty()) return p;
  for (std::size_t pos = 0;;) {
    const std::size_t comma = t.find(',', pos);
    p.push_back(parse_int(t.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos), line));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return p;
}

BufferRef parse_ref(std::string_view t, std::size_t line) {
  const std::size_t at = t.find('@');
  if (at == std::string_view::npos) bad(line, "bad buffer reference '" + std::string(t) + "'");
  return {parse_index(t.substr(0, at), line), parse_int(t.substr(at + 1), line)};
}

std::vector<std::string_view> split(std::string_view t, char sep) {
  std::vector<std::string_view> out;
  if (t.empty()) return out;
  for (std::size_t pos = 0;;) {
    const std::size_t k = t.find(sep, pos);
    out.push_back(t.substr(pos, k == std::string_view::npos ? std::string_view::npos : k - pos));
    if (k == std::string_view::npos) break;
    pos = k + 1;
  }
  return out;
}

using Fields = std::map<std::string_view, std::string_view>;

Fields key_values(std::string_view line_text, std::size_t line) {
  Fields out;
  for (auto tok : split(line_text, ' ')) {
    if (tok.empty()) continue;
    const std::size_t eq = tok.find('=');
    if (eq == std::string_view::npos) {
      out[tok] = "";
      continue;
    }
    if (!out.emplace(tok.substr(0, eq), tok.substr(eq + 1)).second) bad(line, "duplicate key");
  }
  return out;
}

std::string_view need(const Fields& f, std::string_view key, std::size_t line) {
  auto it = f.find(key);
  if (it == f.end()) bad(line, "missing '" + std::string(key) + "'");
  return it->second;
}

ElementMove parse_move(std::string_view t, std::size_t line) {
  const std::size_t paren = t.find('(');
  const std::size_t colon = t.rfind(':');
  if (paren == std::string_view::npos || colon == std::string_view::npos || colon < paren)
    bad(line, "bad element move '" + std::string(t) + "'");
  return {std::string(t.substr(0, paren)), parse_point(t.substr(paren, colon - paren), line),
          parse_ref(t.substr(colon + 1), line)};
}

}  // namespace

std::string plan_text(const CommPlan& plan, const Scop& scop) {
  std::ostringstream out;
  out << "plan grid=" << to_string(plan.grid.extents) << " arity=" << plan.arity << "\n";
  for (std::size_t k = 0; k < plan.channels.size(); ++k) {
    const Channel& c = plan.channels[k];
    out << "channel id=" << k << " family=" << c.family << " slot=" << c.slot << " src="
        << to_string(plan.grid.node(c.src)) << " dst=" << to_string(plan.grid.node(c.dst)) << " tag=" << c.tag
        << " capacity=" << c.capacity << " type=" << to_string(c.type) << (c.loopback() ? " loopback" : "") << "\n";
  }
  for (std::size_t k = 0; k < plan.messages.size(); ++k) {
    const Message& m = plan.messages[k];
    out << "chunk id=" << k << " channel=" << m.channel << " rep=" << to_string(m.representative)
        << " hull=" << to_string(m.hull.lo) << ":" << to_string(m.hull.hi) << " size=" << m.size() << "\n";
  }
  for (const auto& np : plan.nodes) {
    for (const auto& e : np.events) {
      out << "node=" << to_string(np.node) << " t=" << to_string(e.time) << " kind=" << to_string(e.kind);
      if (e.kind != EventKind::Compute) {
        const Message& m = plan.messages.at(e.chunk);
        const Channel& c = plan.channels.at(m.channel);
        out << " chunk=" << e.chunk << " src=" << to_string(plan.grid.node(c.src))
            << " dst=" << to_string(plan.grid.node(c.dst)) << " tag=" << c.tag << " size=" << m.size() << "\n";
        continue;
      }
      out << " stmt=" << scop.statements.at(e.stmt).id << " inst=" << to_string(e.instance);
      auto refs = [&](const char* key, const auto& list) {
        if (list.empty()) return;
        out << " " << key << "=";
        for (std::size_t k = 0; k < list.size(); ++k)
          out << (k ? ";" : "") << list[k].first << ":" << ref_text(list[k].second);
      };
      refs("read", e.reads);
      refs("write", e.writes);
      if (!e.moves.empty()) {
        out << (scop.statements.at(e.stmt).role == Statement::Role::Prologue ? " load=" : " store=");
        for (std::size_t k = 0; k < e.moves.size(); ++k)
          out << (k ? ";" : "") << e.moves[k].field << to_string(e.moves[k].element) << ":"
              << ref_text(e.moves[k].buffer);
      }
      out << "\n";
    }
  }
  return out.str();
}

CommPlan parse_plan(std::string_view text, const Scop& scop) {
  CommPlan plan;
  bool header = false;
  std::size_t line = 0;
  for (auto raw : split(text, '\n')) {
    ++line;
    if (raw.empty() || raw.front() == '#') continue;
    const Fields f = key_values(raw, line);
    const std::string_view head = raw.substr(0, raw.find(' '));
    if (head == "plan") {
      plan.grid.extents = parse_point(need(f, "grid", line), line);
      for (auto e : plan.grid.extents)
        if (e < 1) bad(line, "grid extents must be >= 1");
      plan.arity = parse_index(need(f, "arity", line), line);
      plan.nodes.resize(plan.grid.size());
      for (std::size_t n = 0; n < plan.nodes.size(); ++n) plan.nodes[n].node = plan.grid.node(n);
      header = true;
      continue;
    }
    if (!header) bad(line, "expected the 'plan' header first");
    if (head == "channel") {
      if (parse_index(need(f, "id", line), line) != plan.channels.size()) bad(line, "channel ids must be consecutive");
      Channel c;
      c.family = parse_index(need(f, "family", line), line);
      c.slot = parse_index(need(f, "slot", line), line);
      c.src = plan.grid.id(parse_point(need(f, "src", line), line));
      c.dst = plan.grid.id(parse_point(need(f, "dst", line), line));
      c.tag = parse_int(need(f, "tag", line), line);
      c.capacity = parse_int(need(f, "capacity", line), line);
      const auto type = need(f, "type", line);
      if (type == "bool") c.type = ElemType::Bool;
      else if (type == "int64") c.type = ElemType::Int64;
      else if (type == "float64") c.type = ElemType::Float64;
      else bad(line, "unknown type '" + std::string(type) + "'");
      plan.channels.push_back(c);
      continue;
    }
    if (head == "chunk") {
      if (parse_index(need(f, "id", line), line) != plan.messages.size()) bad(line, "chunk ids must be consecutive");
      Message m;
      m.channel = parse_index(need(f, "channel", line), line);
      if (m.channel >= plan.channels.size()) bad(line, "unknown channel");
      m.representative = parse_point(need(f, "rep", line), line);
      const auto hull = need(f, "hull", line);
      const std::size_t colon = hull.find(':');
      if (colon == std::string_view::npos) bad(line, "bad hull");
      m.hull.lo = parse_point(hull.substr(0, colon), line);
      m.hull.hi = parse_point(hull.substr(colon + 1), line);
      if (m.hull.lo.size() != m.hull.hi.size()) bad(line, "bad hull");
      plan.messages.push_back(std::move(m));
      continue;
    }
    if (!f.count("node")) bad(line, "unrecognised line");
    const std::size_t node = plan.grid.id(parse_point(need(f, "node", line), line));
    Event e;
    e.time = parse_point(need(f, "t", line), line);
    e.kind = parse_event_kind(need(f, "kind", line));
    if (e.kind != EventKind::Compute) {
      e.chunk = parse_index(need(f, "chunk", line), line);
      if (e.chunk >= plan.messages.size()) bad(line, "unknown chunk");
    } else {
      e.stmt = scop.statement_index(need(f, "stmt", line));
      e.instance = parse_point(need(f, "inst", line), line);
      auto refs = [&](std::string_view key, auto& list) {
        auto it = f.find(key);
        if (it == f.end()) return;
        for (auto item : split(it->second, ';')) {
          const std::size_t colon = item.find(':');
          if (colon == std::string_view::npos) bad(line, "bad access reference");
          list.push_back({parse_index(item.substr(0, colon), line), parse_ref(item.substr(colon + 1), line)});
        }
      };
      refs("read", e.reads);
      refs("write", e.writes);
      for (std::string_view key : {"load", "store"})
        if (auto it = f.find(key); it != f.end())
          for (auto item : split(it->second, ';')) e.moves.push_back(parse_move(item, line));
    }
    plan.nodes[node].events.push_back(std::move(e));
  }
  if (!header) throw Error(ErrorKind::ParseError, "plan: missing header");
  return plan;
}

}  // namespace polycomm

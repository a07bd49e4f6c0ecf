#include <set>

#include "polycomm/error.hpp"
#include "polycomm/scop.hpp"

namespace polycomm {

namespace {

std::size_t count_reads(const Expr& e) {
  std::size_t n = e.op == Expr::Op::Access ? 1 : 0;
  for (const auto& a : e.args) n += count_reads(a);
  return n;
}

bool call_reads(const Expr& e) {
  if (e.op == Expr::Op::Call)
    for (const auto& a : e.args)
      if (count_reads(a) > 0) return true;
  for (const auto& a : e.args)
    if (call_reads(a)) return true;
  return false;
}

// A single isolated statement may read at most one access and must not pass
// a field read straight into a call.
bool needs_split(const Expr& e) { return count_reads(e) > 1 || call_reads(e); }

bool associative(Expr::Op op) {
  return op == Expr::Op::Add || op == Expr::Op::Mul || op == Expr::Op::And || op == Expr::Op::Or;
}

void flatten(const Expr& e, Expr::Op op, std::vector<Expr>& out) {
  if (e.op == op) {
    for (const auto& a : e.args) flatten(a, op, out);
  } else {
    out.push_back(e);
  }
}

bool mentions(const Expr& e, const std::string& name) {
  if (e.op == Expr::Op::Scalar && e.name == name) return true;
  for (const auto& a : e.args)
    if (mentions(a, name)) return true;
  return false;
}

void collect_names(const Expr& e, std::set<std::string>& out) {
  if (e.op == Expr::Op::Scalar) out.insert(e.name);
  for (const auto& a : e.args) collect_names(a, out);
}

class Lowering {
 public:
  Lowering(const Scop& scop, std::set<std::string> taken) : scop_(scop), taken_(std::move(taken)) {}

  void action(const Action& a) {
    if (a.kind == Action::Kind::Let) {
      into(a.target, a.value);
      return;
    }
    Action st = a;
    if (count_reads(a.value) > 0 || call_reads(a.value)) {
      const std::string t = named("tmp");
      into(t, a.value);
      st.value = Expr::scalar(t);
    }
    out.push_back(std::move(st));
  }

  std::vector<Action> out;

 private:
  std::string fresh() {
    for (;;) {
      std::string n = "_t" + std::to_string(counter_++);
      if (!taken_.count(n)) return n;
    }
  }

  // Preferred name unless the input program already uses it.
  std::string named(const std::string& preferred) { return taken_.count(preferred) ? fresh() : preferred; }

  void emit(const std::string& target, Expr value) {
    Action a;
    a.kind = Action::Kind::Let;
    a.target = target;
    a.value = std::move(value);
    out.push_back(std::move(a));
  }

  Expr operand(const Expr& e, const std::string& preferred = "") {
    if (!needs_split(e)) return e;
    const std::string t = preferred.empty() ? fresh() : named(preferred);
    into(t, e);
    return Expr::scalar(t);
  }

  void into(const std::string& target, const Expr& e) {
    if (!needs_split(e)) {
      emit(target, e);
      return;
    }
    if (associative(e.op) && count_reads(e) > 1) {
      std::vector<Expr> ops;
      flatten(e, e.op, ops);
      bool clobbers = false;
      for (std::size_t k = 0; k < ops.size(); ++k)
        if (mentions(ops[k], target) && !(k == 0 && ops[k].op == Expr::Op::Scalar)) clobbers = true;
      const std::string acc = clobbers ? fresh() : target;
      if (!(ops[0].op == Expr::Op::Scalar && ops[0].name == acc)) into(acc, ops[0]);
      for (std::size_t k = 1; k < ops.size(); ++k)
        emit(acc, Expr::node(e.op, {Expr::scalar(acc), operand(ops[k])}));
      if (acc != target) emit(target, Expr::scalar(acc));
      return;
    }
    Expr r = e;
    if (e.op == Expr::Op::Call) {
      const Function& fn = scop_.functions.at(e.name);
      for (std::size_t k = 0; k < r.args.size(); ++k)
        if (count_reads(r.args[k]) > 0) {
          const std::string t = named(fn.params[k]);
          into(t, r.args[k]);
          r.args[k] = Expr::scalar(t);
        }
      emit(target, r);
      return;
    }
    for (auto& a : r.args) a = operand(a);
    // Still more than one read: hoist all but the last reading operand.
    std::size_t remaining = count_reads(r);
    for (auto& a : r.args) {
      if (remaining <= 1) break;
      const std::size_t n = count_reads(a);
      if (n == 0) continue;
      const std::string t = fresh();
      into(t, a);
      a = Expr::scalar(t);
      remaining -= n;
    }
    emit(target, r);
  }

  const Scop& scop_;
  std::set<std::string> taken_;
  int counter_ = 0;
};

void renumber(Expr& e, std::size_t from) {
  if (e.op == Expr::Op::Access && e.index == from) e.index = 0;
  for (auto& a : e.args) renumber(a, from);
}

std::vector<std::size_t> accesses_of(const Action& a) {
  std::vector<std::size_t> out;
  std::function<void(const Expr&)> walk = [&](const Expr& e) {
    if (e.op == Expr::Op::Access) out.push_back(e.index);
    for (const auto& c : e.args) walk(c);
  };
  walk(a.value);
  if (a.kind == Action::Kind::Store) out.push_back(a.access);
  return out;
}

IntMap with_ordinal(const IntMap& sched, std::int64_t ordinal) {
  std::vector<MapPiece> pieces = sched.pieces();
  const std::size_t n = sched.domain_space().arity();
  for (auto& p : pieces) p.outputs.push_back(AffineExpr(n, ordinal));
  return IntMap(sched.domain_space(), Space::anonymous(sched.range_space().arity() + 1), std::move(pieces));
}

}  // namespace

Scop isolate_accesses(const Scop& s) {
  std::set<std::string> taken;
  std::set<std::string> ids;
  for (const auto& st : s.statements) {
    ids.insert(st.id);
    for (const auto& a : st.body) {
      if (a.kind == Action::Kind::Let) taken.insert(a.target);
      collect_names(a.value, taken);
    }
  }
  Scop out = s;
  out.statements.clear();
  out.scatter_arity = s.scatter_arity + 1;
  for (const auto& st : s.statements) {
    if (st.accesses.size() <= 1) {
      Statement copy = st;
      copy.schedule = with_ordinal(st.schedule, 0);
      out.statements.push_back(std::move(copy));
      continue;
    }
    Lowering low(s, taken);
    for (const auto& a : st.body) low.action(a);
    for (std::size_t k = 0; k < low.out.size(); ++k) {
      Statement part;
      part.id = st.id + "." + std::to_string(k + 1);
      while (ids.count(part.id)) part.id += "_";
      ids.insert(part.id);
      part.domain = st.domain.with_space(Space(part.id, st.domain.space().dims));
      part.schedule = with_ordinal(st.schedule, static_cast<std::int64_t>(k + 1))
                          .with_spaces(part.domain.space(), Space::anonymous(out.scatter_arity));
      Action a = low.out[k];
      auto used = accesses_of(a);
      if (!used.empty()) {
        const std::size_t from = used.front();
        part.accesses.push_back(st.accesses[from]);
        renumber(a.value, from);
        if (a.kind == Action::Kind::Store) a.access = 0;
      }
      part.body.push_back(std::move(a));
      derive_scalars(part);
      out.statements.push_back(std::move(part));
    }
  }
  for (auto& st : out.statements)
    if (st.schedule.range_space().arity() != out.scatter_arity)
      st.schedule = st.schedule.with_spaces(st.domain.space(), Space::anonymous(out.scatter_arity));
  return out;
}

}  // namespace polycomm

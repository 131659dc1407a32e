#include "aim/tlt.hpp"

#include <algorithm>

namespace aim {

namespace {

std::shared_ptr<SpecNode> atom(std::string name, const TimeStateSet& set) {
  auto n = std::make_shared<SpecNode>();
  n->op = TltOp::Atom;
  n->name = std::move(name);
  n->binding = std::make_shared<const TimeStateSet>(set);
  return n;
}

std::shared_ptr<SpecNode> wrap(TltOp op, std::shared_ptr<SpecNode> child) {
  auto n = std::make_shared<SpecNode>();
  n->op = op;
  n->children.push_back(std::move(child));
  return n;
}

const SpecNode* sole_child(const SpecNode& n) {
  return n.children.size() == 1 ? n.children.front().get() : nullptr;
}

const TimeStateSet& bound_set(const SpecNode& a) {
  if (!a.binding) {
    throw UnboundPropositionError("proposition '" + a.name + "' has no bound set");
  }
  return *a.binding;
}

}  // namespace

SpecFormula build_intersection_spec(const TimeStateSet& goal,
                                    const TimeStateSet& constraint,
                                    const std::vector<TimeStateSet>& dangers) {
  if (!goal.grid().same_as(constraint.grid())) {
    throw GridMismatchError("build_intersection_spec: goal/constraint grids differ");
  }
  auto root = std::make_shared<SpecNode>();
  root->op = TltOp::And;
  root->children.push_back(wrap(TltOp::Eventually, atom("g", goal)));
  root->children.push_back(wrap(TltOp::Always, atom("c", constraint)));
  if (!dangers.empty()) {
    TimeStateSet d = dangers.front();
    for (std::size_t i = 1; i < dangers.size(); ++i) d = set_union(d, dangers[i]);
    if (!d.grid().same_as(constraint.grid())) {
      throw GridMismatchError("build_intersection_spec: danger grid differs");
    }
    root->children.push_back(wrap(TltOp::Always, wrap(TltOp::Not, atom("d", d))));
  }
  return SpecFormula{root};
}

LogicTree evaluate(const SpecFormula& spec, const VehicleModel& model,
                   const SolveOptions& opts) {
  if (!spec.root) throw UnsupportedPatternError("empty formula");
  const SpecNode& root = *spec.root;

  const SpecNode* goal_atom = nullptr;
  const SpecNode* constraint_atom = nullptr;
  const SpecNode* danger_atom = nullptr;

  if (root.op == TltOp::Eventually) {
    const SpecNode* a = sole_child(root);
    if (!a || a->op != TltOp::Atom) {
      throw UnsupportedPatternError("eventually must wrap an atomic proposition");
    }
    goal_atom = a;
  } else if (root.op == TltOp::And) {
    for (const auto& child : root.children) {
      if (child->op == TltOp::Eventually) {
        const SpecNode* a = sole_child(*child);
        if (!a || a->op != TltOp::Atom || goal_atom) {
          throw UnsupportedPatternError("expected a single eventually(atom) conjunct");
        }
        goal_atom = a;
      } else if (child->op == TltOp::Always) {
        const SpecNode* inner = sole_child(*child);
        if (inner && inner->op == TltOp::Atom && !constraint_atom) {
          constraint_atom = inner;
        } else if (inner && inner->op == TltOp::Not && !danger_atom) {
          const SpecNode* a = sole_child(*inner);
          if (!a || a->op != TltOp::Atom) {
            throw UnsupportedPatternError("negation must wrap an atomic proposition");
          }
          danger_atom = a;
        } else {
          throw UnsupportedPatternError("unrecognized always(...) conjunct");
        }
      } else {
        throw UnsupportedPatternError("conjunct outside the supported fragment");
      }
    }
    if (!goal_atom) throw UnsupportedPatternError("missing eventually(goal) conjunct");
  } else {
    throw UnsupportedPatternError("root operator outside the supported fragment");
  }

  const TimeStateSet& goal = bound_set(*goal_atom);

  // The constraint under which the reach solve runs: c, intersected with the
  // complement of the unioned dangers when present.
  TimeStateSet constraint =
      constraint_atom
          ? bound_set(*constraint_atom)
          : TimeStateSet::constant(goal.grid_ptr(), goal.t0(), goal.dt(),
                                   goal.slice_count(), -1.0f);
  std::shared_ptr<const TimeStateSet> danger_complement;
  if (danger_atom) {
    danger_complement =
        std::make_shared<const TimeStateSet>(set_complement(bound_set(*danger_atom)));
    constraint = set_intersection(constraint, *danger_complement);
  }

  auto reach = std::make_shared<const TimeStateSet>(
      backward_tube(goal, constraint, model, opts));

  auto mk = [](TltOp op, std::string name, std::shared_ptr<const TimeStateSet> set) {
    auto n = std::make_shared<LogicTree::Node>();
    n->op = op;
    n->name = std::move(name);
    n->set = std::move(set);
    return n;
  };

  auto goal_node = mk(TltOp::Atom, "g", goal_atom->binding);
  auto eventually = mk(TltOp::Eventually, "", reach);
  eventually->children.push_back(goal_node);

  if (root.op == TltOp::Eventually) {
    return LogicTree{eventually};
  }

  auto tree_root = mk(TltOp::And, "", nullptr);
  tree_root->children.push_back(eventually);

  // Root set: intersection of the conjunct sets. The reach solve already
  // masked by the other conjuncts every step, so this is an exact no-op on
  // the values; it is kept so the tree is a faithful evaluation.
  TimeStateSet root_set = *reach;
  if (constraint_atom) {
    auto c_node = mk(TltOp::Always, "", constraint_atom->binding);
    c_node->children.push_back(mk(TltOp::Atom, "c", constraint_atom->binding));
    tree_root->children.push_back(c_node);
    root_set = set_intersection(root_set, bound_set(*constraint_atom));
  }
  if (danger_atom) {
    auto d_node = mk(TltOp::Atom, "d", danger_atom->binding);
    auto not_node = mk(TltOp::Not, "", danger_complement);
    not_node->children.push_back(d_node);
    auto always_not = mk(TltOp::Always, "", danger_complement);
    always_not->children.push_back(not_node);
    tree_root->children.push_back(always_not);
    root_set = set_intersection(root_set, *danger_complement);
  }
  tree_root->set = std::make_shared<const TimeStateSet>(std::move(root_set));
  return LogicTree{tree_root};
}

bool check_satisfiable(const LogicTree& tree, const TimeStateSet& query) {
  const TimeStateSet& root = tree.root_set();
  double eps = root.grid().epsilon_empty();
  for (std::size_t k = 0; k < query.slice_count(); ++k) {
    double t = query.time_of(k);
    if (!root.covers(t)) continue;
    std::size_t rk = root.nearest_slice(t);
    const auto& qv = query.slice(k).values();
    const auto& rv = root.slice(rk).values();
    for (std::size_t i = 0; i < qv.size(); ++i) {
      if (std::max(qv[i], rv[i]) <= -eps) return true;
    }
  }
  return false;
}

}  // namespace aim

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "aim/reach.hpp"

namespace aim {

enum class TltOp { Atom, Not, And, Or, Always, Eventually };

// Formula tree in negation normal form. Atomic propositions are bound to the
// time-state sets they denote before evaluation.
struct SpecNode {
  TltOp op = TltOp::Atom;
  std::string name;  // atoms only
  std::shared_ptr<const TimeStateSet> binding;  // atoms only
  std::vector<std::shared_ptr<SpecNode>> children;
};

struct SpecFormula {
  std::shared_ptr<SpecNode> root;
};

// phi_j = eventually(g) and always(c) [and always(not d)], with all danger
// sets unioned under the single negated proposition d.
SpecFormula build_intersection_spec(const TimeStateSet& goal,
                                    const TimeStateSet& constraint,
                                    const std::vector<TimeStateSet>& dangers);

// Mirrored tree annotated with the set computed for each subformula; the root
// set is the satisfying time-state set.
struct LogicTree {
  struct Node {
    TltOp op = TltOp::Atom;
    std::string name;
    std::shared_ptr<const TimeStateSet> set;
    std::vector<std::shared_ptr<Node>> children;
  };
  std::shared_ptr<Node> root;

  const TimeStateSet& root_set() const { return *root->set; }
};

// Evaluates the phi_j fragment. The eventually-under-constraints pattern maps
// to a single backward reachability solve; the boolean connectives map to set
// algebra. Formulas outside the fragment raise UnsupportedPattern.
LogicTree evaluate(const SpecFormula& spec, const VehicleModel& model,
                   const SolveOptions& opts = {});

// True iff query intersects the root set above the emptiness threshold.
bool check_satisfiable(const LogicTree& tree, const TimeStateSet& query);

}  // namespace aim

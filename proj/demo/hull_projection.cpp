// Fits a small subspace to a simulated family, builds the hull of the family
// and checks whether a few operators lie inside it.

#include <iostream>

#include "opsub/opsub.hpp"

int main() {
  using namespace opsub;

  FamilyParams params;
  params.set_grid(12);
  params.operators = 20;
  params.seed = 4;
  const Family family = generate_family(params);

  SubspaceModel model = als_fit(family, 6, 6, hosvd_init(family, 6, 6));
  std::cout << "relative fit error " << model.fit / total_energy(family) << " after "
            << model.history.size() << " half-steps\n";

  const HullModel hull = build_hull(family, model);
  const HullOptions options{20000, 0.0, SimplexMethod::Sort};

  // A family member, the midpoint of two members, and a fresh operator.
  params.seed = 5;
  params.operators = 1;
  const FactoredOperator fresh = generate_family(params).front();
  Matrix a(family[0].rows(), family[0].rank_bound() + family[1].rank_bound());
  a << 0.5 * family[0].alphas(), 0.5 * family[1].alphas();
  Matrix b(family[0].cols(), a.cols());
  b << family[0].betas(), family[1].betas();
  const FactoredOperator midpoint(a, b);

  for (const auto& [name, op] : {std::pair<const char*, const FactoredOperator&>{"member", family[3]},
                                 {"midpoint", midpoint},
                                 {"fresh", fresh}}) {
    const HullDistance d = hull_membership_distance(op, hull, options);
    std::cout << name << ": distance to hull " << d.total() << " (in subspace " << d.reduced
              << ", orthogonal " << d.orthogonal << ") relative to norm " << frobenius_norm(op) << "\n";
  }
}

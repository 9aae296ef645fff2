#ifndef NOMA_IPM_HPP
#define NOMA_IPM_HPP

#include "noma/conic.hpp"

namespace noma {

struct IpmOptions {
    double tolerance = 1e-8;
    // When the residuals stall above `tolerance`, the best iterate is still
    // reported as optimal if its certificates reach this looser level.
    double reduced_tolerance = 1e-5;
    int max_iterations = 200;
};

/// Bundled conic solver: infeasible-start primal-dual interior-point method
/// with Nesterov-Todd scaling and a Mehrotra predictor-corrector step, over
/// products of nonnegative, second-order, and PSD cones (equality rows are
/// carried as a separate dual block in the KKT system).
class IpmBackend : public SolverBackend {
  public:
    explicit IpmBackend(IpmOptions options = {}) : options_(options) {}
    Solution solve(const ConicProgram& program) override;

  private:
    IpmOptions options_;
};

} // namespace noma

#endif

#ifndef NOMA_CONIC_HPP
#define NOMA_CONIC_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <iosfwd>
#include <string>
#include <vector>

namespace noma {

enum class ConeType {
    Zero,   // equality rows: h - Gx = 0
    NonNeg, // h - Gx >= 0 elementwise
    Soc,    // h - Gx = (u0, u1) with u0 >= ||u1||
    Psd     // h - Gx = svec(S), S real symmetric PSD
};

struct ConeBlock {
    ConeType type = ConeType::NonNeg;
    int size = 0; // rows for Zero/NonNeg, cone dimension for Soc, matrix order for Psd

    int rows() const { return type == ConeType::Psd ? size * (size + 1) / 2 : size; }
};

/// minimize c'x  subject to  h - Gx in K (product of cone blocks, in order).
/// Rows are appended block by block; entries accumulate through g()/h_at().
struct ConicProgram {
    int n_vars = 0;
    std::vector<double> cost;
    std::vector<Eigen::Triplet<double>> entries;
    std::vector<double> rhs;
    std::vector<ConeBlock> blocks;

    // Metadata in the reporting convention of the problem statement: n counts
    // complex precoder entries plus one rate slack per message; m counts
    // power blocks, per-decoder rate rows, QoS cone rows, and PSD trust
    // blocks at one per receive antenna. Internal realified variables and
    // epigraph plumbing are deliberately not part of these tallies.
    int n_reported = 0;
    int m_reported = 0;

    int add_variables(int count, double cost_each = 0.0) {
        const int first = n_vars;
        n_vars += count;
        cost.resize(n_vars, cost_each);
        return first;
    }
    void set_cost(int var, double value) { cost[var] = value; }

    /// Appends a block and returns its first row index.
    int add_block(ConeType type, int size) {
        const int first = static_cast<int>(rhs.size());
        blocks.push_back({type, size});
        rhs.resize(rhs.size() + blocks.back().rows(), 0.0);
        return first;
    }
    void g(int row, int col, double value) {
        if (value != 0.0) entries.emplace_back(row, col, value);
    }
    void h_at(int row, double value) { rhs[row] = value; }

    int n_rows() const { return static_cast<int>(rhs.size()); }
    Eigen::SparseMatrix<double> g_matrix() const;
    Eigen::VectorXd h_vector() const;
    Eigen::VectorXd c_vector() const;
};

enum class SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible, // primal unbounded
    IterationLimit,
    NumericalFailure
};

const char* to_string(SolveStatus s);

struct Solution {
    SolveStatus status = SolveStatus::NumericalFailure;
    Eigen::VectorXd x;
    double objective = 0.0;         // c'x at exit
    int iterations = 0;
    double wall_time_s = 0.0;
    double certificate_residual = 0.0; // max of primal/dual residual and relative gap at exit
};

class SolverBackend {
  public:
    virtual ~SolverBackend() = default;
    virtual Solution solve(const ConicProgram& program) = 0;
};

/// Self-describing text dump (variables, cones, sparse affine maps) for
/// cross-checking against external solvers.
void dump_program(const ConicProgram& program, std::ostream& out);

} // namespace noma

#endif

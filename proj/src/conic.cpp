#include "noma/conic.hpp"

#include <ostream>

namespace noma {

Eigen::SparseMatrix<double> ConicProgram::g_matrix() const {
    Eigen::SparseMatrix<double> g(n_rows(), n_vars);
    g.setFromTriplets(entries.begin(), entries.end());
    return g;
}

Eigen::VectorXd ConicProgram::h_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
}

Eigen::VectorXd ConicProgram::c_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(cost.data(), static_cast<Eigen::Index>(cost.size()));
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::PrimalInfeasible: return "infeasible";
        case SolveStatus::DualInfeasible: return "unbounded";
        case SolveStatus::IterationLimit: return "iteration-limit";
        case SolveStatus::NumericalFailure: return "numerical-failure";
    }
    return "?";
}

void dump_program(const ConicProgram& program, std::ostream& out) {
    out << "conic-program v1\n";
    out << "vars " << program.n_vars << "\nrows " << program.n_rows() << "\n";
    out << "cost";
    for (double c : program.cost) out << ' ' << c;
    out << "\nblocks";
    for (const auto& b : program.blocks) {
        const char* name = b.type == ConeType::Zero     ? "zero"
                           : b.type == ConeType::NonNeg ? "nonneg"
                           : b.type == ConeType::Soc    ? "soc"
                                                        : "psd";
        out << ' ' << name << ':' << b.size;
    }
    out << "\nh";
    for (double v : program.rhs) out << ' ' << v;
    out << "\nG";
    const Eigen::SparseMatrix<double> g = program.g_matrix();
    for (int k = 0; k < g.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(g, k); it; ++it)
            out << ' ' << it.row() << ',' << it.col() << ',' << it.value();
    out << "\n";
}

} // namespace noma

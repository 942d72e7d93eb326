#include "pfenkf/fracture/field_state.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pfenkf::fracture {

namespace {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool equal_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() && (a.size() == 0 || (a.array() == b.array()).all());
}

std::string next_line(std::istream& is) {
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] != '#') return line;
    }
    throw std::runtime_error("field dump truncated");
}

double parse_double(std::istringstream& ls) {
    std::string tok;
    if (!(ls >> tok)) throw std::runtime_error("field dump: missing value");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) throw std::runtime_error("field dump: bad number '" + tok + "'");
    return v;
}

}  // namespace

Eigen::VectorXd FieldState::stacked() const {
    Eigen::VectorXd a(u.size() + d.size());
    a << u, d;
    return a;
}

void FieldState::set_stacked(const Eigen::VectorXd& a) {
    if (a.size() != u.size() + d.size()) throw std::invalid_argument("stacked state has wrong size");
    u = a.head(u.size());
    d = a.tail(d.size());
}

bool operator==(const FieldState& a, const FieldState& b) {
    return equal_vec(a.u, b.u) && equal_vec(a.d, b.d) && equal_vec(a.phi, b.phi) && equal_vec(a.d_prev2, b.d_prev2) &&
           a.history == b.history && a.last_increment == b.last_increment && a.step == b.step && a.load == b.load;
}

FieldState make_initial_state(const fem::FeSpace& space, const Eigen::VectorXd& phi_floor) {
    if (static_cast<std::size_t>(phi_floor.size()) != space.num_qp_total())
        throw std::invalid_argument("phase floor must have one value per quadrature point");
    FieldState s;
    s.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_u_dofs()));
    s.d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_nodes()));
    s.d_prev2 = s.d;
    s.phi = phi_floor;
    return s;
}

void write_field_dump(std::ostream& os, const fem::FeSpace& space, const FieldState& s, bool with_history) {
    const int dim = space.dim();
    const auto& mesh = space.mesh();
    os << "# step " << s.step << " load " << fmt17(s.load) << "\n";
    os << "# nodes " << mesh.num_nodes() << "\n";
    for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
        os << n << ' ' << fmt17(mesh.node(n)[0]);
        if (dim == 2) os << ' ' << fmt17(mesh.node(n)[1]);
        for (int c = 0; c < dim; ++c) os << ' ' << fmt17(s.u[static_cast<Eigen::Index>(space.u_dof(n, c))]);
        os << ' ' << fmt17(s.d[static_cast<Eigen::Index>(n)]) << '\n';
    }
    os << "# phase " << space.num_qp_total() << "\n";
    for (std::size_t e = 0; e < space.num_elements(); ++e)
        for (int q = 0; q < space.nqp(); ++q)
            os << e << ' ' << q << ' ' << fmt17(s.phi[static_cast<Eigen::Index>(e * space.nqp() + q)]) << '\n';
    if (with_history) {
        os << "# history\n";
        os << "meta " << s.step << ' ' << fmt17(s.load) << ' ' << s.history << ' ' << fmt17(s.last_increment) << '\n';
        for (Eigen::Index n = 0; n < s.d_prev2.size(); ++n) os << n << ' ' << fmt17(s.d_prev2[n]) << '\n';
    }
}

FieldState read_field_dump(std::istream& is, const fem::FeSpace& space) {
    const int dim = space.dim();
    const auto nn = static_cast<Eigen::Index>(space.num_nodes());
    FieldState s;
    s.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_u_dofs()));
    s.d = Eigen::VectorXd::Zero(nn);
    s.d_prev2 = Eigen::VectorXd::Zero(nn);
    s.phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_qp_total()));

    std::string line;
    // Header carries step and load; the optional history block repeats them.
    while (std::getline(is, line)) {
        if (line.rfind("# step ", 0) == 0) {
            std::istringstream ls(line.substr(7));
            ls >> s.step;
            std::string kw;
            ls >> kw;
            s.load = parse_double(ls);
            break;
        }
    }
    for (Eigen::Index n = 0; n < nn; ++n) {
        std::istringstream ls(next_line(is));
        long id = -1;
        ls >> id;
        if (id != n) throw std::runtime_error("field dump: node ids out of order");
        for (int c = 0; c < dim; ++c) parse_double(ls);  // coordinates
        for (int c = 0; c < dim; ++c) s.u[n * dim + c] = parse_double(ls);
        s.d[n] = parse_double(ls);
    }
    for (Eigen::Index k = 0; k < s.phi.size(); ++k) {
        std::istringstream ls(next_line(is));
        long e = -1, q = -1;
        ls >> e >> q;
        if (e * space.nqp() + q != k) throw std::runtime_error("field dump: phase entries out of order");
        s.phi[k] = parse_double(ls);
    }
    while (std::getline(is, line)) {
        if (line.rfind("meta ", 0) == 0) {
            std::istringstream ls(line.substr(5));
            ls >> s.step;
            s.load = parse_double(ls);
            ls >> s.history;
            s.last_increment = parse_double(ls);
            for (Eigen::Index n = 0; n < nn; ++n) {
                std::istringstream hs(next_line(is));
                long id = -1;
                hs >> id;
                s.d_prev2[n] = parse_double(hs);
            }
            break;
        }
    }
    return s;
}

}  // namespace pfenkf::fracture

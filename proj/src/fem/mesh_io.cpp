#include "pfenkf/fem/mesh_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace pfenkf::fem {

namespace {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string next_token(std::istream& is, const char* what) {
    std::string tok;
    while (is >> tok) {
        if (tok.front() == '#') {
            std::string rest;
            std::getline(is, rest);
            continue;
        }
        return tok;
    }
    throw MeshError(std::string("mesh file truncated while reading ") + what);
}

void expect(std::istream& is, const std::string& keyword) {
    const auto tok = next_token(is, keyword.c_str());
    if (tok != keyword) throw MeshError("mesh file: expected '" + keyword + "', got '" + tok + "'");
}

long read_int(std::istream& is, const char* what) {
    const auto tok = next_token(is, what);
    std::size_t pos = 0;
    long v = std::stol(tok, &pos);
    if (pos != tok.size()) throw MeshError(std::string("mesh file: bad integer for ") + what);
    return v;
}

double read_double(std::istream& is, const char* what) {
    const auto tok = next_token(is, what);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) throw MeshError(std::string("mesh file: bad number for ") + what);
    return v;
}

}  // namespace

void write_mesh(std::ostream& os, const Mesh& mesh) {
    const int dim = mesh.dim();
    os << "# pfenkf mesh\n";
    os << "dim " << dim << "\n";
    os << "nodes " << mesh.num_nodes() << "\n";
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        os << i << ' ' << fmt17(mesh.node(i)[0]);
        if (dim == 2) os << ' ' << fmt17(mesh.node(i)[1]);
        os << '\n';
    }
    os << "elements " << mesh.num_elements() << "\n";
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        os << e;
        for (int a = 0; a < mesh.nodes_per_element(); ++a) os << ' ' << mesh.element(e)[a];
        os << '\n';
    }
    for (const auto& [name, ids] : mesh.boundaries()) {
        os << "boundary " << name << ' ' << ids.size() << "\n";
        for (std::size_t k = 0; k < ids.size(); ++k) os << ids[k] << (k + 1 == ids.size() ? "\n" : " ");
    }
    if (const auto& slit = mesh.slit()) {
        os << "slit " << fmt17(slit->y) << ' ' << fmt17(slit->x_begin) << ' ' << fmt17(slit->x_tip) << ' '
           << slit->lower.size() << "\n";
        for (std::size_t k = 0; k < slit->lower.size(); ++k) os << slit->lower[k] << ' ' << slit->upper[k] << '\n';
    }
    os << "end\n";
}

Mesh read_mesh(std::istream& is) {
    expect(is, "dim");
    const int dim = static_cast<int>(read_int(is, "dim"));
    if (dim != 1 && dim != 2) throw MeshError("mesh file: dim must be 1 or 2");
    expect(is, "nodes");
    const long nn = read_int(is, "node count");
    std::vector<Point> nodes(static_cast<std::size_t>(nn));
    for (long i = 0; i < nn; ++i) {
        if (read_int(is, "node id") != i) throw MeshError("mesh file: node ids must be consecutive");
        nodes[i][0] = read_double(is, "x");
        nodes[i][1] = dim == 2 ? read_double(is, "y") : 0.0;
    }
    expect(is, "elements");
    const long ne = read_int(is, "element count");
    std::vector<std::array<int, 3>> elements(static_cast<std::size_t>(ne), {-1, -1, -1});
    for (long e = 0; e < ne; ++e) {
        if (read_int(is, "element id") != e) throw MeshError("mesh file: element ids must be consecutive");
        for (int a = 0; a < dim + 1; ++a) elements[e][a] = static_cast<int>(read_int(is, "element node"));
    }
    std::map<std::string, std::vector<int>> boundary;
    std::optional<Slit> slit;
    for (;;) {
        const auto tok = next_token(is, "section");
        if (tok == "end") break;
        if (tok == "boundary") {
            const auto name = next_token(is, "boundary name");
            const long n = read_int(is, "boundary size");
            auto& ids = boundary[name];
            for (long k = 0; k < n; ++k) ids.push_back(static_cast<int>(read_int(is, "boundary node")));
        } else if (tok == "slit") {
            Slit s;
            s.y = read_double(is, "slit y");
            s.x_begin = read_double(is, "slit x_begin");
            s.x_tip = read_double(is, "slit x_tip");
            const long n = read_int(is, "slit size");
            for (long k = 0; k < n; ++k) {
                s.lower.push_back(static_cast<int>(read_int(is, "slit lower")));
                s.upper.push_back(static_cast<int>(read_int(is, "slit upper")));
            }
            slit = std::move(s);
        } else {
            throw MeshError("mesh file: unknown section '" + tok + "'");
        }
    }
    return Mesh(dim, std::move(nodes), std::move(elements), std::move(boundary), std::move(slit));
}

void save_mesh(const std::string& path, const Mesh& mesh) {
    std::ofstream os(path);
    if (!os) throw MeshError("cannot write mesh file " + path);
    write_mesh(os, mesh);
}

Mesh load_mesh(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MeshError("cannot open mesh file " + path);
    return read_mesh(is);
}

}  // namespace pfenkf::fem

#pragma once

#include <iosfwd>
#include <string>

#include "pfenkf/fem/mesh.hpp"

namespace pfenkf::fem {

/// Plain-text listing: a `nodes` block (id, x[, y]), an `elements` block
/// (id, node ids), one `boundary` block per named set and an optional `slit`
/// block of lower/upper node pairs. Coordinates are written with 17
/// significant digits so a write/read cycle reproduces the mesh bit for bit.
void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);

void save_mesh(const std::string& path, const Mesh& mesh);
Mesh load_mesh(const std::string& path);

}  // namespace pfenkf::fem

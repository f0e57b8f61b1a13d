// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>

#include "hegmm/matrix.hpp"

namespace hegmm {

// Text format: first line "rows cols", then one line of space-separated
// integers per row. JSON format: {"rows": r, "cols": c, "data": [...]} with
// row-major data.
Matrix read_matrix_text(std::istream& in, const std::string& origin = "<stream>");
Matrix read_matrix_json(std::istream& in, const std::string& origin = "<stream>");

/// Auto-detects by extension: .json parses JSON, anything else the text form.
Matrix read_matrix_file(const std::string& path);

void write_matrix_text(const Matrix& m, std::ostream& out);
std::string matrix_to_json(const Matrix& m, int indent = -1);

}  // namespace hegmm

// SPDX-License-Identifier: Apache-2.0
#include "hegmm/matrix_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hegmm {

Matrix read_matrix_text(std::istream& in, const std::string& origin) {
    std::size_t rows = 0, cols = 0;
    if (!(in >> rows >> cols)) {
        throw ParseError(origin + ": expected a header line 'rows cols'");
    }
    if (rows == 0 || cols == 0) {
        throw ParseError(origin + ": dimensions must be positive");
    }
    std::vector<value_t> data;
    data.reserve(rows * cols);
    for (std::size_t i = 0; i < rows * cols; ++i) {
        value_t v = 0;
        if (!(in >> v)) {
            throw ParseError(origin + ": expected " + std::to_string(rows * cols) +
                             " entries, found " + std::to_string(i));
        }
        data.push_back(v);
    }
    return Matrix(rows, cols, std::move(data));
}

Matrix read_matrix_json(std::istream& in, const std::string& origin) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": invalid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
        throw ParseError(origin + ": JSON matrix needs rows, cols and data fields");
    }
    try {
        const auto rows = j.at("rows").get<std::size_t>();
        const auto cols = j.at("cols").get<std::size_t>();
        auto data = j.at("data").get<std::vector<value_t>>();
        if (rows == 0 || cols == 0) {
            throw ParseError(origin + ": dimensions must be positive");
        }
        if (data.size() != rows * cols) {
            throw ParseError(origin + ": data length " + std::to_string(data.size()) +
                             " does not match " + std::to_string(rows) + "x" +
                             std::to_string(cols));
        }
        return Matrix(rows, cols, std::move(data));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": malformed JSON matrix: " + e.what());
    }
}

Matrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }
    const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
    return json ? read_matrix_json(in, path) : read_matrix_text(in, path);
}

void write_matrix_text(const Matrix& m, std::ostream& out) {
    out << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c > 0) {
                out << ' ';
            }
            out << m(r, c);
        }
        out << '\n';
    }
}

std::string matrix_to_json(const Matrix& m, int indent) {
    nlohmann::json j{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
    return j.dump(indent);
}

}  // namespace hegmm

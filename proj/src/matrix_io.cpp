#include "conic/matrix_io.hpp"

#include "conic/error.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace conic {

namespace {

std::vector<double> parse_row(const std::string& line, std::size_t line_no) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto first = cell.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            throw Error(ErrorCode::InvalidInput, "empty cell on line " + std::to_string(line_no));
        }
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(cell.substr(first), &used);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidInput,
                        "cannot parse '" + cell + "' on line " + std::to_string(line_no));
        }
        if (cell.substr(first + used).find_first_not_of(" \t\r") != std::string::npos) {
            throw Error(ErrorCode::InvalidInput,
                        "trailing characters in '" + cell + "' on line " + std::to_string(line_no));
        }
        row.push_back(value);
    }
    return row;
}

} // namespace

Matrix read_matrix_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        rows.push_back(parse_row(line, line_no));
        if (rows.back().size() != rows.front().size()) {
            throw Error(ErrorCode::ShapeMismatch, "ragged CSV row on line " + std::to_string(line_no));
        }
    }
    if (rows.empty()) {
        throw Error(ErrorCode::InvalidInput, "empty matrix file");
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    require_finite(m, "matrix file");
    return m;
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::InvalidInput, "cannot open " + path);
    }
    return read_matrix_csv(in);
}

Vector read_vector_csv(const std::string& path) {
    const Matrix m = read_matrix_csv(path);
    if (m.rows() != 1 && m.cols() != 1) {
        throw Error(ErrorCode::ShapeMismatch, path + " is not a vector");
    }
    return m.rows() == 1 ? Vector(m.row(0).transpose()) : Vector(m.col(0));
}

void write_matrix_csv(std::ostream& out, const Matrix& m, int precision) {
    out << std::setprecision(precision);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out << ',';
            }
            out << m(i, j);
        }
        out << '\n';
    }
}

void write_matrix_csv(const std::string& path, const Matrix& m, int precision) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::InvalidInput, "cannot write " + path);
    }
    write_matrix_csv(out, m, precision);
}

} // namespace conic

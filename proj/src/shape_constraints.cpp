#include "conic/shape_constraints.hpp"

#include "conic/error.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>

namespace conic {

Shape parse_shape(std::string_view name) {
    if (name == "nonneg") return Shape::Nonneg;
    if (name == "increasing") return Shape::Increasing;
    if (name == "decreasing") return Shape::Decreasing;
    if (name == "convex") return Shape::Convex;
    if (name == "concave") return Shape::Concave;
    throw Error(ErrorCode::InvalidSpec, "unknown shape '" + std::string(name) + "'");
}

std::string_view to_string(Shape shape) {
    switch (shape) {
    case Shape::Nonneg: return "nonneg";
    case Shape::Increasing: return "increasing";
    case Shape::Decreasing: return "decreasing";
    case Shape::Convex: return "convex";
    case Shape::Concave: return "concave";
    }
    return "?";
}

namespace {

Index min_points(Shape shape) {
    switch (shape) {
    case Shape::Nonneg: return 1;
    case Shape::Increasing:
    case Shape::Decreasing: return 2;
    case Shape::Convex:
    case Shape::Concave: return 3;
    }
    return 1;
}

Index block_rows(const ShapeBlock& block) {
    return block.last - block.first + 2 - min_points(block.shape);
}

} // namespace

void ShapeSpec::validate() const {
    if (grid_size < 1) {
        throw Error(ErrorCode::InvalidSpec, "grid size must be positive");
    }
    if (blocks.empty()) {
        throw Error(ErrorCode::InvalidSpec, "no constraint blocks");
    }
    std::vector<char> covered(static_cast<std::size_t>(grid_size), 0);
    Index rows = 0;
    for (const auto& block : blocks) {
        if (block.first < 0 || block.last >= grid_size || block.first > block.last) {
            throw Error(ErrorCode::InvalidSpec, "block [" + std::to_string(block.first + 1) + ", " +
                                                    std::to_string(block.last + 1) + "] outside the grid");
        }
        if (block.last - block.first + 1 < min_points(block.shape)) {
            throw Error(ErrorCode::InvalidSpec, std::string(to_string(block.shape)) + " block needs at least " +
                                                    std::to_string(min_points(block.shape)) + " points");
        }
        for (Index j = block.first; j <= block.last; ++j) {
            covered[static_cast<std::size_t>(j)] = 1;
        }
        rows += block_rows(block);
    }
    if (std::find(covered.begin(), covered.end(), 0) != covered.end()) {
        throw Error(ErrorCode::InvalidSpec, "blocks leave grid points uncovered");
    }
    for (std::size_t k = 0; k < equality_rows.size(); ++k) {
        if (equality_rows[k] < 0 || equality_rows[k] >= rows) {
            throw Error(ErrorCode::InvalidSpec, "equality row " + std::to_string(equality_rows[k] + 1) +
                                                    " outside the " + std::to_string(rows) + " rows");
        }
        if (k > 0 && equality_rows[k] <= equality_rows[k - 1]) {
            throw Error(ErrorCode::InvalidSpec, "equality rows must be increasing");
        }
    }
}

FacetCone build_constraint_matrix(const ShapeSpec& spec) {
    spec.validate();
    Index rows = 0;
    for (const auto& block : spec.blocks) {
        rows += block_rows(block);
    }
    Matrix a = Matrix::Zero(rows, spec.grid_size);
    Index r = 0;
    for (const auto& block : spec.blocks) {
        for (Index j = block.first; j + min_points(block.shape) - 1 <= block.last; ++j, ++r) {
            switch (block.shape) {
            case Shape::Nonneg:
                a(r, j) = 1.0;
                break;
            case Shape::Increasing:
                a(r, j) = -1.0;
                a(r, j + 1) = 1.0;
                break;
            case Shape::Decreasing:
                a(r, j) = 1.0;
                a(r, j + 1) = -1.0;
                break;
            case Shape::Convex:
                a(r, j) = 1.0;
                a(r, j + 1) = -2.0;
                a(r, j + 2) = 1.0;
                break;
            case Shape::Concave:
                a(r, j) = -1.0;
                a(r, j + 1) = 2.0;
                a(r, j + 2) = -1.0;
                break;
            }
        }
    }
    return FacetCone{std::move(a), spec.equality_rows};
}

ShapeSpec parse_shape_spec(std::istream& in) {
    ShapeSpec spec;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream words(line);
        std::string keyword;
        if (!(words >> keyword)) {
            continue;
        }
        auto fail = [&](const std::string& why) {
            throw Error(ErrorCode::InvalidSpec, "line " + std::to_string(line_no) + ": " + why);
        };
        if (keyword == "grid") {
            if (!(words >> spec.grid_size)) fail("expected 'grid <n>'");
        } else if (keyword == "equality") {
            Index row = 0;
            while (words >> row) {
                spec.equality_rows.push_back(row - 1);
            }
            if (!words.eof()) fail("equality rows must be integers");
        } else {
            ShapeBlock block{parse_shape(keyword), 0, 0};
            if (!(words >> block.first >> block.last)) fail("expected '<shape> <first> <last>'");
            block.first -= 1;
            block.last -= 1;
            spec.blocks.push_back(block);
        }
        std::string extra;
        if (keyword != "equality" && (words >> extra)) fail("unexpected '" + extra + "'");
    }
    std::sort(spec.equality_rows.begin(), spec.equality_rows.end());
    spec.validate();
    return spec;
}

ShapeSpec read_shape_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::InvalidInput, "cannot open " + path);
    }
    return parse_shape_spec(in);
}

// Blocks below are written with 1-based grid points and shifted once.
namespace {

ShapeSpec make_spec(Index grid, std::initializer_list<ShapeBlock> one_based) {
    ShapeSpec spec{grid, {}, {}};
    for (auto block : one_based) {
        block.first -= 1;
        block.last -= 1;
        spec.blocks.push_back(block);
    }
    return spec;
}

using Entry = std::pair<Index, double>; // 1-based column, value

Matrix from_rows(Index cols, std::initializer_list<std::initializer_list<Entry>> rows) {
    Matrix a = Matrix::Zero(static_cast<Index>(rows.size()), cols);
    Index r = 0;
    for (const auto& row : rows) {
        for (const auto& [col, value] : row) {
            a(r, col - 1) = value;
        }
        ++r;
    }
    return a;
}

} // namespace

ShapeSpec bell20_spec() {
    return make_spec(20, {
                             {Shape::Convex, 1, 9},
                             {Shape::Concave, 8, 13},
                             {Shape::Convex, 12, 20},
                             {Shape::Increasing, 1, 2},
                             {Shape::Nonneg, 1, 1},
                             {Shape::Decreasing, 19, 20},
                             {Shape::Nonneg, 20, 20},
                         });
}

ShapeSpec nhanes24_spec() {
    return make_spec(24, {
                             {Shape::Nonneg, 1, 5},
                             {Shape::Increasing, 5, 6},
                             {Shape::Convex, 5, 9},
                             {Shape::Concave, 8, 21},
                             {Shape::Convex, 20, 23},
                             {Shape::Decreasing, 23, 24},
                             {Shape::Nonneg, 24, 24},
                         });
}

Matrix bell20_matrix() {
    return from_rows(20, {
        {{1, 1}, {2, -2}, {3, 1}},
        {{2, 1}, {3, -2}, {4, 1}},
        {{3, 1}, {4, -2}, {5, 1}},
        {{4, 1}, {5, -2}, {6, 1}},
        {{5, 1}, {6, -2}, {7, 1}},
        {{6, 1}, {7, -2}, {8, 1}},
        {{7, 1}, {8, -2}, {9, 1}},
        {{8, -1}, {9, 2}, {10, -1}},
        {{9, -1}, {10, 2}, {11, -1}},
        {{10, -1}, {11, 2}, {12, -1}},
        {{11, -1}, {12, 2}, {13, -1}},
        {{12, 1}, {13, -2}, {14, 1}},
        {{13, 1}, {14, -2}, {15, 1}},
        {{14, 1}, {15, -2}, {16, 1}},
        {{15, 1}, {16, -2}, {17, 1}},
        {{16, 1}, {17, -2}, {18, 1}},
        {{17, 1}, {18, -2}, {19, 1}},
        {{18, 1}, {19, -2}, {20, 1}},
        {{1, -1}, {2, 1}},
        {{1, 1}},
        {{19, 1}, {20, -1}},
        {{20, 1}},
    });
}

Matrix nhanes24_matrix() {
    return from_rows(24, {
        {{1, 1}},
        {{2, 1}},
        {{3, 1}},
        {{4, 1}},
        {{5, 1}},
        {{5, -1}, {6, 1}},
        {{5, 1}, {6, -2}, {7, 1}},
        {{6, 1}, {7, -2}, {8, 1}},
        {{7, 1}, {8, -2}, {9, 1}},
        {{8, -1}, {9, 2}, {10, -1}},
        {{9, -1}, {10, 2}, {11, -1}},
        {{10, -1}, {11, 2}, {12, -1}},
        {{11, -1}, {12, 2}, {13, -1}},
        {{12, -1}, {13, 2}, {14, -1}},
        {{13, -1}, {14, 2}, {15, -1}},
        {{14, -1}, {15, 2}, {16, -1}},
        {{15, -1}, {16, 2}, {17, -1}},
        {{16, -1}, {17, 2}, {18, -1}},
        {{17, -1}, {18, 2}, {19, -1}},
        {{18, -1}, {19, 2}, {20, -1}},
        {{19, -1}, {20, 2}, {21, -1}},
        {{20, 1}, {21, -2}, {22, 1}},
        {{21, 1}, {22, -2}, {23, 1}},
        {{23, 1}, {24, -1}},
        {{24, 1}},
    });
}

FacetCone preset_cone(std::string_view name) {
    if (name == "bell20") {
        return FacetCone{bell20_matrix(), {}};
    }
    if (name == "nhanes24") {
        return FacetCone{nhanes24_matrix(), {}};
    }
    throw Error(ErrorCode::InvalidSpec, "unknown preset '" + std::string(name) + "'");
}

IndexList bell20_sparse_equalities() {
    IndexList rows;
    for (const Index one_based : {8, 9, 10, 12, 13, 15, 16, 17, 18, 21, 22}) {
        rows.push_back(one_based - 1);
    }
    return rows;
}

FacetCone sparse_scenario_cone(const FacetCone& base, IndexList equality_rows) {
    base.validate();
    std::sort(equality_rows.begin(), equality_rows.end());
    equality_rows.erase(std::unique(equality_rows.begin(), equality_rows.end()), equality_rows.end());
    for (const Index row : equality_rows) {
        if (row < 0 || row >= base.row_count()) {
            throw Error(ErrorCode::IndexOutOfRange, "equality row " + std::to_string(row));
        }
    }
    return FacetCone{base.a, std::move(equality_rows)};
}

} // namespace conic

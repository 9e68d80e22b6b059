#pragma once

#include "conic/cone_geometry.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace conic {

enum class Shape { Nonneg, Increasing, Decreasing, Convex, Concave };

Shape parse_shape(std::string_view name);
std::string_view to_string(Shape shape);

/// One run of constraint rows over grid points [first, last] (0-based, inclusive):
/// unit rows for Nonneg, first differences for Increasing/Decreasing, and
/// (1,-2,1) / (-1,2,-1) second differences for Convex/Concave.
struct ShapeBlock {
    Shape shape = Shape::Nonneg;
    Index first = 0;
    Index last = 0;
};

/// Blocks emit rows in the listed order. Curvature blocks may overlap; their
/// union must cover the whole grid.
struct ShapeSpec {
    Index grid_size = 0;
    std::vector<ShapeBlock> blocks;
    IndexList equality_rows;

    void validate() const;
};

FacetCone build_constraint_matrix(const ShapeSpec& spec);

/// Parses the line-oriented spec format:
///
///     grid 20
///     convex 1 9          # shape first last, 1-based inclusive
///     nonneg 20 20
///     equality 8 9 10     # 1-based row numbers
///
/// '#' starts a comment.
ShapeSpec parse_shape_spec(std::istream& in);
ShapeSpec read_shape_spec(const std::string& path);

/// Bell-shaped constraints on 20 points (22 rows).
ShapeSpec bell20_spec();
/// Daily activity constraints on 24 hourly points (25 rows).
ShapeSpec nhanes24_spec();

/// Literal integer matrices of the two presets.
Matrix bell20_matrix();
Matrix nhanes24_matrix();

/// Preset by name ("bell20" or "nhanes24"); the cone is built from the literal matrix.
FacetCone preset_cone(std::string_view name);

/// Rows held at equality in the sparse simulation scenario (0-based).
IndexList bell20_sparse_equalities();

/// `base` with its linearity set replaced by `equality_rows`.
FacetCone sparse_scenario_cone(const FacetCone& base, IndexList equality_rows);

} // namespace conic

#pragma once

#include "conic/error.hpp"
#include "conic/linalg.hpp"
#include "conic/matrix_io.hpp"

#include <cmath>
#include <initializer_list>
#include <string>

namespace testing {

inline std::string golden(const std::string& name) {
    return std::string(CONIC_TEST_DATA_DIR) + "/" + name;
}

inline conic::Vector vec(std::initializer_list<double> values) {
    return Eigen::Map<const conic::Vector>(values.begin(), static_cast<conic::Index>(values.size()));
}

inline conic::Matrix hexagonal_facets() {
    conic::Matrix a(6, 3);
    for (int i = 0; i < 6; ++i) {
        const double t = 2.0 * 3.14159265358979323846 * i / 6.0;
        a(i, 0) = std::cos(t);
        a(i, 1) = std::sin(t);
        a(i, 2) = 1.0;
    }
    return a;
}

} // namespace testing

#define CHECK_THROWS_CODE(expr, expected)                                                                        \
    do {                                                                                                         \
        bool thrown_ = false;                                                                                    \
        try {                                                                                                    \
            (void)(expr);                                                                                        \
        } catch (const conic::Error& e_) {                                                                       \
            thrown_ = true;                                                                                      \
            CHECK(e_.code() == (expected));                                                                      \
        }                                                                                                        \
        CHECK_MESSAGE(thrown_, "expected conic::Error from " #expr);                                             \
    } while (false)

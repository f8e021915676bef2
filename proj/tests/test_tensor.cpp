#include "datadiet/tensor.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace datadiet;

TEST_CASE("Tensor2 stores rows contiguously") {
    Tensor2 t(2, 3, 1.5);
    CHECK(t.size() == 6);
    t(1, 2) = 7.0;
    CHECK(t.data[5] == 7.0);
    CHECK(t.row(1)[2] == 7.0);
    CHECK(t.row(0).size() == 3);
}

TEST_CASE("all_finite flags NaN and infinity") {
    Tensor2 t(1, 2);
    CHECK(t.all_finite());
    t(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(t.all_finite());
    t(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("l2 norms") {
    const std::vector<double> v{3.0, 4.0};
    CHECK(l2_norm(v) == 5.0);
    CHECK(squared_l2_norm(v) == 25.0);
    CHECK(l2_norm(std::vector<double>{}) == 0.0);
}

#include "mfp/error.hpp"
#include "mfp/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace mfp;

TEST(Tensor, FillConstructorSetsShapeAndValues) {
    Tensor t({2, 3}, 1.5f);
    EXPECT_EQ(t.rank(), 2u);
    EXPECT_EQ(t.numel(), 6u);
    EXPECT_EQ(t.dim(1), 3u);
    for (float v : t.data()) EXPECT_EQ(v, 1.5f);
}

TEST(Tensor, RejectsEmptyOrZeroShapes) {
    EXPECT_THROW(Tensor(Shape{}), ShapeError);
    EXPECT_THROW(Tensor(Shape{2, 0}), ShapeError);
    EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<float>(3)), ShapeError);
}

TEST(Tensor, RowMajorAccess) {
    Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
    EXPECT_EQ(t.at(1, 2), 5.0f);
    EXPECT_EQ(t.row(1)[0], 3.0f);
    EXPECT_EQ(t.row(1).size(), 3u);
}

TEST(Tensor, ReshapeKeepsDataAndChecksCount) {
    Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
    const Tensor r = t.reshaped({3, 2});
    EXPECT_EQ(r.at(2, 1), 5.0f);
    EXPECT_THROW(t.reshaped({4, 2}), ShapeError);
}

TEST(Tensor, TransposeSwapsAxes) {
    Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
    const Tensor tt = t.transposed();
    ASSERT_EQ(tt.shape(), (Shape{3, 2}));
    EXPECT_EQ(tt.at(2, 0), 2.0f);
    EXPECT_EQ(tt.at(0, 1), 3.0f);
    EXPECT_EQ(tt.transposed(), t);
}

TEST(Tensor, DimOutOfRangeThrows) {
    Tensor t({2, 3});
    EXPECT_THROW(t.dim(2), ShapeError);
}

TEST(Tensor, FiniteChecks) {
    Tensor t({3}, {1, 2, 3});
    EXPECT_TRUE(t.all_finite());
    EXPECT_NO_THROW(require_finite(t, "t"));
    t[1] = std::numeric_limits<float>::quiet_NaN();
    EXPECT_FALSE(t.all_finite());
    EXPECT_THROW(require_finite(t, "t"), NumericError);
    t[1] = std::numeric_limits<float>::infinity();
    EXPECT_THROW(require_finite(t, "t"), NumericError);
}

TEST(Tensor, RequireRank) {
    Tensor t({2, 3});
    EXPECT_NO_THROW(require_rank(t, 2, "t"));
    EXPECT_THROW(require_rank(t, 3, "t"), ShapeError);
}

TEST(Tensor, ShapeHelpers) {
    EXPECT_EQ(shape_numel({2, 3, 4}), 24u);
    EXPECT_EQ(shape_to_string({2, 3}), "[2, 3]");
}

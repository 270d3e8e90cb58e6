#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "msfem/linalg.hpp"

using namespace msfem::linalg;

namespace {

CsrMatrix from_dense(const std::vector<std::vector<double>>& a)
{
    TripletBuffer buf(static_cast<Index>(a.size()), static_cast<Index>(a[0].size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a[i].size(); ++j) {
            if (a[i][j] != 0.0) buf.add(static_cast<Index>(i), static_cast<Index>(j), a[i][j]);
        }
    }
    return assemble_from_triplets(buf);
}

// Random sparse, diagonally weighted matrix with a nonsymmetric pattern.
CsrMatrix random_sparse(Index n, std::mt19937& gen, double diag = 4.0)
{
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::uniform_int_distribution<Index> col(0, n - 1);
    TripletBuffer buf(n, n);
    for (Index i = 0; i < n; ++i) {
        buf.add(i, i, diag + d(gen));
        for (int k = 0; k < 4; ++k) buf.add(i, col(gen), d(gen));
    }
    return assemble_from_triplets(buf);
}

double residual_bound(const CsrMatrix& a, const Vector& x, const Vector& b)
{
    Vector r = spmv(a, x);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= b[k];
    return norm2(r) / (frobenius_norm(a) * norm2(x) + norm2(b));
}

}  // namespace

TEST(Triplets, DuplicatesAreSummed)
{
    TripletBuffer buf(2, 3);
    buf.add(0, 2, 1.5);
    buf.add(1, 0, 2.0);
    buf.add(0, 2, -0.5);
    const CsrMatrix a = assemble_from_triplets(buf);
    EXPECT_EQ(a.nnz(), 2u);
    EXPECT_DOUBLE_EQ(a.at(0, 2), 1.0);
    EXPECT_DOUBLE_EQ(a.at(1, 0), 2.0);
    EXPECT_DOUBLE_EQ(a.at(1, 1), 0.0);
}

TEST(Triplets, OutOfRangeRejected)
{
    TripletBuffer buf(2, 2);
    EXPECT_THROW(buf.add(2, 0, 1.0), std::out_of_range);
    EXPECT_THROW(buf.add(0, -1, 1.0), std::out_of_range);
}

TEST(Triplets, OrderIndependentForDistinctKeys)
{
    std::mt19937 gen(3);
    std::vector<Triplet> t;
    std::uniform_real_distribution<double> d(-1, 1);
    for (Index i = 0; i < 20; ++i) {
        for (Index j = 0; j < 20; j += 3) t.push_back({i, j, d(gen)});
    }
    TripletBuffer a(20, 20), b(20, 20);
    for (const auto& e : t) a.add(e.row, e.col, e.value);
    std::shuffle(t.begin(), t.end(), gen);
    for (const auto& e : t) b.add(e.row, e.col, e.value);
    const auto ma = assemble_from_triplets(a), mb = assemble_from_triplets(b);
    ASSERT_EQ(ma.nnz(), mb.nnz());
    for (std::size_t k = 0; k < ma.nnz(); ++k) {
        EXPECT_EQ(ma.values()[k], mb.values()[k]);
        EXPECT_EQ(ma.col_indices()[k], mb.col_indices()[k]);
    }
}

TEST(Csr, ConstructorValidatesStructure)
{
    EXPECT_THROW(CsrMatrix(2, 2, {0, 1, 1}, {0, 0}, {1.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(CsrMatrix(1, 2, {0, 2}, {1, 0}, {1.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(CsrMatrix(1, 2, {0, 1}, {2}, {1.0}), std::invalid_argument);
}

TEST(Csr, SpmvMatchesDense)
{
    const std::vector<std::vector<double>> d{{1, 0, 2}, {0, 3, 0}, {4, 5, 6}};
    const CsrMatrix a = from_dense(d);
    const Vector x{1.0, -2.0, 0.5};
    const Vector y = spmv(a, x);
    EXPECT_DOUBLE_EQ(y[0], 2.0);
    EXPECT_DOUBLE_EQ(y[1], -6.0);
    EXPECT_DOUBLE_EQ(y[2], -3.0);
    Vector z{1.0, 1.0, 1.0};
    spmv_add(a, x, z, 2.0);
    EXPECT_DOUBLE_EQ(z[2], -5.0);
}

TEST(Csr, TransposeAndAdd)
{
    const CsrMatrix a = from_dense({{1, 2, 0}, {0, 0, 3}});
    const CsrMatrix t = a.transpose();
    EXPECT_EQ(t.nrows(), 3);
    EXPECT_DOUBLE_EQ(t.at(2, 1), 3.0);
    EXPECT_DOUBLE_EQ(t.at(1, 0), 2.0);
    const CsrMatrix b = from_dense({{0, 1, 1}, {1, 0, 0}});
    const CsrMatrix c = add(a, b, 2.0, -1.0);
    EXPECT_DOUBLE_EQ(c.at(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(c.at(0, 1), 3.0);
    EXPECT_DOUBLE_EQ(c.at(0, 2), -1.0);
    EXPECT_DOUBLE_EQ(c.at(1, 0), -1.0);
    EXPECT_DOUBLE_EQ(c.at(1, 2), 6.0);
    EXPECT_THROW((void)add(a, t), std::invalid_argument);
}

TEST(Csr, AppendBlockOffsets)
{
    const CsrMatrix a = from_dense({{1, 2}, {3, 4}});
    TripletBuffer buf(4, 4);
    append_block(buf, a, 2, 1, -1.0);
    const CsrMatrix m = assemble_from_triplets(buf);
    EXPECT_DOUBLE_EQ(m.at(2, 1), -1.0);
    EXPECT_DOUBLE_EQ(m.at(3, 2), -4.0);
    EXPECT_EQ(m.nnz(), 4u);
}

TEST(Csr, Norms)
{
    const CsrMatrix a = from_dense({{3, 0}, {0, -4}});
    EXPECT_DOUBLE_EQ(frobenius_norm(a), 5.0);
    EXPECT_DOUBLE_EQ(max_abs(a), 4.0);
    EXPECT_DOUBLE_EQ(dot(Vector{1, 2}, Vector{3, 4}), 11.0);
}

TEST(Lu, IdentitySolveIsExact)
{
    const Vector b{1.0, -2.0, 3.5};
    const Vector x = lu_solve(CsrMatrix::identity(3), b);
    EXPECT_EQ(x, b);
}

TEST(Lu, DenseNeedsPivoting)
{
    // Zero leading entry: unpivoted elimination would divide by zero.
    const CsrMatrix a = from_dense({{0, 1}, {1, 1}});
    const Vector x = lu_solve(a, Vector{2.0, 3.0});
    EXPECT_NEAR(x[0], 1.0, 1e-15);
    EXPECT_NEAR(x[1], 2.0, 1e-15);
}

TEST(Lu, DenseRandomResidual)
{
    std::mt19937 gen(11);
    const CsrMatrix a = random_sparse(300, gen);
    LuFactors lu(a);
    EXPECT_TRUE(lu.is_dense());
    for (int rhs = 0; rhs < 3; ++rhs) {
        Vector b(300);
        std::uniform_real_distribution<double> d(-1, 1);
        for (auto& v : b) v = d(gen);
        EXPECT_LE(residual_bound(a, lu.solve(b), b), 1e-10);
    }
}

TEST(Lu, SparseRandomResidual)
{
    std::mt19937 gen(12);
    const Index n = kDenseThreshold + 500;
    const CsrMatrix a = random_sparse(n, gen);
    LuFactors lu(a);
    EXPECT_FALSE(lu.is_dense());
    for (int rhs = 0; rhs < 2; ++rhs) {
        Vector b(n);
        std::uniform_real_distribution<double> d(-1, 1);
        for (auto& v : b) v = d(gen);
        EXPECT_LE(residual_bound(a, lu.solve(b), b), 1e-10);
    }
}

TEST(Lu, SparseAndDenseAgree)
{
    std::mt19937 gen(5);
    const Index n = kDenseThreshold + 10;
    const CsrMatrix a = random_sparse(n, gen);
    Vector b(n, 1.0);
    const Vector xs = LuFactors(a).solve(b);
    EXPECT_LE(residual_bound(a, xs, b), 1e-12);
}

TEST(Lu, SingularMatrixReported)
{
    const CsrMatrix a = from_dense({{1, 2}, {2, 4}});
    EXPECT_THROW(LuFactors{a}, SingularMatrixError);

    TripletBuffer buf(kDenseThreshold + 5, kDenseThreshold + 5);
    for (Index i = 0; i < kDenseThreshold + 4; ++i) buf.add(i, i, 1.0);
    buf.add(kDenseThreshold + 4, 0, 1.0);
    buf.add(0, kDenseThreshold + 4, 0.0);
    EXPECT_THROW(LuFactors{assemble_from_triplets(buf)}, SingularMatrixError);
}

TEST(Lu, NonSquareRejected)
{
    EXPECT_THROW(LuFactors{CsrMatrix::zero(2, 3)}, std::invalid_argument);
}

TEST(Lu, WrongRhsLength)
{
    LuFactors lu(CsrMatrix::identity(3));
    EXPECT_THROW((void)lu.solve(Vector{1.0}), std::invalid_argument);
}

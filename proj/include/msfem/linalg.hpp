#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace msfem::linalg {

using Index = std::int32_t;
using Vector = std::vector<double>;

/// Systems with fewer unknowns than this are factorized densely.
inline constexpr Index kDenseThreshold = 2000;

/// A pivot is treated as zero when |pivot| <= kPivotTolerance * (largest
/// magnitude in its column of the input matrix).
inline constexpr double kPivotTolerance = 1e-14;

class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, Index pivot)
        : std::runtime_error(what), pivot_(pivot) {}

    [[nodiscard]] Index pivot() const noexcept { return pivot_; }

private:
    Index pivot_;
};

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Unordered (row, col, value) accumulator with a fixed target shape.
class TripletBuffer {
public:
    TripletBuffer(Index nrows, Index ncols);

    void add(Index row, Index col, double value);
    void append(const TripletBuffer& other);
    void reserve(std::size_t n) { entries_.reserve(n); }

    [[nodiscard]] Index nrows() const noexcept { return nrows_; }
    [[nodiscard]] Index ncols() const noexcept { return ncols_; }
    [[nodiscard]] std::span<const Triplet> entries() const noexcept { return entries_; }

private:
    Index nrows_;
    Index ncols_;
    std::vector<Triplet> entries_;
};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row. Stored zeros are kept, so the pattern of an assembled
/// matrix depends only on which entries were touched.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(Index nrows, Index ncols, std::vector<Index> row_offsets,
              std::vector<Index> col_indices, std::vector<double> values);

    static CsrMatrix identity(Index n);
    static CsrMatrix zero(Index nrows, Index ncols);

    [[nodiscard]] Index nrows() const noexcept { return nrows_; }
    [[nodiscard]] Index ncols() const noexcept { return ncols_; }
    [[nodiscard]] std::size_t nnz() const noexcept { return values_.size(); }

    [[nodiscard]] std::span<const Index> row_offsets() const noexcept { return row_offsets_; }
    [[nodiscard]] std::span<const Index> col_indices() const noexcept { return col_indices_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    /// Entry (row, col), zero when outside the pattern.
    [[nodiscard]] double at(Index row, Index col) const;

    [[nodiscard]] CsrMatrix transpose() const;

private:
    Index nrows_ = 0;
    Index ncols_ = 0;
    std::vector<Index> row_offsets_{0};
    std::vector<Index> col_indices_;
    std::vector<double> values_;
};

/// Sums duplicates in (row, col, insertion) order, so the result is
/// bit-identical for any permutation of entries with distinct keys and for
/// any split of the buffer that preserves the relative order of duplicates.
[[nodiscard]] CsrMatrix assemble_from_triplets(const TripletBuffer& buf);

[[nodiscard]] Vector spmv(const CsrMatrix& a, std::span<const double> x);

/// y += alpha * A x
void spmv_add(const CsrMatrix& a, std::span<const double> x, std::span<double> y,
              double alpha = 1.0);

/// alpha * A + beta * B on the union pattern.
[[nodiscard]] CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double alpha = 1.0,
                            double beta = 1.0);

/// Copies scale * A into buf at offset (row0, col0).
void append_block(TripletBuffer& buf, const CsrMatrix& a, Index row0, Index col0,
                  double scale = 1.0);

[[nodiscard]] double max_abs(const CsrMatrix& a);
[[nodiscard]] double dot(std::span<const double> x, std::span<const double> y);
[[nodiscard]] double norm2(std::span<const double> x);
/// Frobenius norm, used as the matrix norm in residual bounds.
[[nodiscard]] double frobenius_norm(const CsrMatrix& a);

/// LU factorization of a square matrix with row pivoting. Small systems use
/// a dense partial-pivoting kernel; larger ones use a sparse multifrontal LU.
/// The factorization can be reused for any number of right-hand sides.
class LuFactors {
public:
    explicit LuFactors(const CsrMatrix& a);
    ~LuFactors();
    LuFactors(LuFactors&&) noexcept;
    LuFactors& operator=(LuFactors&&) noexcept;
    LuFactors(const LuFactors&) = delete;
    LuFactors& operator=(const LuFactors&) = delete;

    [[nodiscard]] Vector solve(std::span<const double> b) const;

    [[nodiscard]] Index size() const noexcept { return n_; }
    [[nodiscard]] bool is_dense() const noexcept;

private:
    struct Dense;
    struct Sparse;

    Index n_ = 0;
    std::unique_ptr<Dense> dense_;
    std::unique_ptr<Sparse> sparse_;
};

[[nodiscard]] Vector lu_solve(const CsrMatrix& a, std::span<const double> b);

}  // namespace msfem::linalg

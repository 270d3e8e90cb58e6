#include "msfem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <umfpack.h>

namespace msfem::linalg {

// ---------------------------------------------------------------------------
// TripletBuffer
// ---------------------------------------------------------------------------

TripletBuffer::TripletBuffer(Index nrows, Index ncols) : nrows_(nrows), ncols_(ncols)
{
    if (nrows < 0 || ncols < 0) {
        throw std::invalid_argument("TripletBuffer: negative shape");
    }
}

void TripletBuffer::add(Index row, Index col, double value)
{
    if (row < 0 || row >= nrows_ || col < 0 || col >= ncols_) {
        throw std::out_of_range("TripletBuffer::add: index (" + std::to_string(row) + ", " +
                                std::to_string(col) + ") outside " + std::to_string(nrows_) +
                                "x" + std::to_string(ncols_));
    }
    entries_.push_back({row, col, value});
}

void TripletBuffer::append(const TripletBuffer& other)
{
    if (other.nrows_ != nrows_ || other.ncols_ != ncols_) {
        throw std::invalid_argument("TripletBuffer::append: shape mismatch");
    }
    entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
}

// ---------------------------------------------------------------------------
// CsrMatrix
// ---------------------------------------------------------------------------

CsrMatrix::CsrMatrix(Index nrows, Index ncols, std::vector<Index> row_offsets,
                     std::vector<Index> col_indices, std::vector<double> values)
    : nrows_(nrows),
      ncols_(ncols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values))
{
    if (nrows < 0 || ncols < 0) {
        throw std::invalid_argument("CsrMatrix: negative shape");
    }
    if (row_offsets_.size() != static_cast<std::size_t>(nrows) + 1 || row_offsets_.front() != 0) {
        throw std::invalid_argument("CsrMatrix: row_offsets must have nrows+1 entries starting at 0");
    }
    if (static_cast<std::size_t>(row_offsets_.back()) != col_indices_.size() ||
        col_indices_.size() != values_.size()) {
        throw std::invalid_argument("CsrMatrix: row_offsets/col_indices/values lengths disagree");
    }
    for (Index r = 0; r < nrows; ++r) {
        if (row_offsets_[r + 1] < row_offsets_[r]) {
            throw std::invalid_argument("CsrMatrix: row_offsets must be nondecreasing");
        }
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            const Index c = col_indices_[k];
            if (c < 0 || c >= ncols) {
                throw std::invalid_argument("CsrMatrix: column index out of range");
            }
            if (k > row_offsets_[r] && c <= col_indices_[k - 1]) {
                throw std::invalid_argument("CsrMatrix: column indices must be strictly increasing");
            }
        }
    }
}

CsrMatrix CsrMatrix::identity(Index n)
{
    std::vector<Index> offsets(n + 1);
    std::vector<Index> cols(n);
    std::iota(offsets.begin(), offsets.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    return CsrMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

CsrMatrix CsrMatrix::zero(Index nrows, Index ncols)
{
    return CsrMatrix(nrows, ncols, std::vector<Index>(nrows + 1, 0), {}, {});
}

double CsrMatrix::at(Index row, Index col) const
{
    const auto first = col_indices_.begin() + row_offsets_[row];
    const auto last = col_indices_.begin() + row_offsets_[row + 1];
    const auto it = std::lower_bound(first, last, col);
    if (it == last || *it != col) {
        return 0.0;
    }
    return values_[it - col_indices_.begin()];
}

CsrMatrix CsrMatrix::transpose() const
{
    std::vector<Index> offsets(ncols_ + 1, 0);
    for (Index c : col_indices_) {
        ++offsets[c + 1];
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    std::vector<Index> cols(nnz());
    std::vector<double> vals(nnz());
    std::vector<Index> next(offsets.begin(), offsets.end() - 1);
    for (Index r = 0; r < nrows_; ++r) {
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            const Index dst = next[col_indices_[k]]++;
            cols[dst] = r;
            vals[dst] = values_[k];
        }
    }
    return CsrMatrix(ncols_, nrows_, std::move(offsets), std::move(cols), std::move(vals));
}

// ---------------------------------------------------------------------------
// Assembly and products
// ---------------------------------------------------------------------------

CsrMatrix assemble_from_triplets(const TripletBuffer& buf)
{
    const Index nrows = buf.nrows();
    const auto entries = buf.entries();

    // Stable counting sort by row keeps insertion order within each row.
    std::vector<Index> row_count(nrows + 1, 0);
    for (const Triplet& t : entries) {
        ++row_count[t.row + 1];
    }
    std::partial_sum(row_count.begin(), row_count.end(), row_count.begin());
    std::vector<Index> order(entries.size());
    {
        std::vector<Index> next(row_count.begin(), row_count.end() - 1);
        for (std::size_t k = 0; k < entries.size(); ++k) {
            order[next[entries[k].row]++] = static_cast<Index>(k);
        }
    }

    std::vector<Index> offsets(nrows + 1, 0);
    std::vector<Index> cols;
    std::vector<double> vals;
    cols.reserve(entries.size());
    vals.reserve(entries.size());
    for (Index r = 0; r < nrows; ++r) {
        const auto first = order.begin() + row_count[r];
        const auto last = order.begin() + row_count[r + 1];
        std::stable_sort(first, last,
                         [&](Index a, Index b) { return entries[a].col < entries[b].col; });
        for (auto it = first; it != last; ++it) {
            const Triplet& t = entries[*it];
            if (!cols.empty() && static_cast<Index>(cols.size()) > offsets[r] && cols.back() == t.col) {
                vals.back() += t.value;
            } else {
                cols.push_back(t.col);
                vals.push_back(t.value);
            }
        }
        offsets[r + 1] = static_cast<Index>(cols.size());
    }
    return CsrMatrix(nrows, buf.ncols(), std::move(offsets), std::move(cols), std::move(vals));
}

void spmv_add(const CsrMatrix& a, std::span<const double> x, std::span<double> y, double alpha)
{
    if (x.size() != static_cast<std::size_t>(a.ncols()) ||
        y.size() != static_cast<std::size_t>(a.nrows())) {
        throw std::invalid_argument("spmv: dimension mismatch");
    }
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (Index r = 0; r < a.nrows(); ++r) {
        double s = 0.0;
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            s += vals[k] * x[cols[k]];
        }
        y[r] += alpha * s;
    }
}

Vector spmv(const CsrMatrix& a, std::span<const double> x)
{
    Vector y(a.nrows(), 0.0);
    spmv_add(a, x, y, 1.0);
    return y;
}

CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double alpha, double beta)
{
    if (a.nrows() != b.nrows() || a.ncols() != b.ncols()) {
        throw std::invalid_argument("add: shape mismatch");
    }
    const auto ao = a.row_offsets();
    const auto ac = a.col_indices();
    const auto av = a.values();
    const auto bo = b.row_offsets();
    const auto bc = b.col_indices();
    const auto bv = b.values();

    std::vector<Index> offsets(a.nrows() + 1, 0);
    std::vector<Index> cols;
    std::vector<double> vals;
    cols.reserve(a.nnz() + b.nnz());
    vals.reserve(a.nnz() + b.nnz());
    for (Index r = 0; r < a.nrows(); ++r) {
        Index i = ao[r];
        Index j = bo[r];
        while (i < ao[r + 1] || j < bo[r + 1]) {
            if (j >= bo[r + 1] || (i < ao[r + 1] && ac[i] < bc[j])) {
                cols.push_back(ac[i]);
                vals.push_back(alpha * av[i]);
                ++i;
            } else if (i >= ao[r + 1] || bc[j] < ac[i]) {
                cols.push_back(bc[j]);
                vals.push_back(beta * bv[j]);
                ++j;
            } else {
                cols.push_back(ac[i]);
                vals.push_back(alpha * av[i] + beta * bv[j]);
                ++i;
                ++j;
            }
        }
        offsets[r + 1] = static_cast<Index>(cols.size());
    }
    return CsrMatrix(a.nrows(), a.ncols(), std::move(offsets), std::move(cols), std::move(vals));
}

void append_block(TripletBuffer& buf, const CsrMatrix& a, Index row0, Index col0, double scale)
{
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (Index r = 0; r < a.nrows(); ++r) {
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            buf.add(row0 + r, col0 + cols[k], scale * vals[k]);
        }
    }
}

double max_abs(const CsrMatrix& a)
{
    double m = 0.0;
    for (double v : a.values()) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

double dot(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw std::invalid_argument("dot: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += x[i] * y[i];
    }
    return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double frobenius_norm(const CsrMatrix& a)
{
    double s = 0.0;
    for (double v : a.values()) {
        s += v * v;
    }
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// LU
// ---------------------------------------------------------------------------

struct LuFactors::Dense {
    Index n;
    std::vector<double> lu;  // row-major, unit lower L below the diagonal
    std::vector<Index> perm; // row k of LU is row perm[k] of A

    explicit Dense(const CsrMatrix& a) : n(a.nrows()), lu(static_cast<std::size_t>(n) * n, 0.0), perm(n)
    {
        const auto offsets = a.row_offsets();
        const auto cols = a.col_indices();
        const auto vals = a.values();
        std::vector<double> col_max(n, 0.0);
        for (Index r = 0; r < n; ++r) {
            for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
                lu[static_cast<std::size_t>(r) * n + cols[k]] = vals[k];
                col_max[cols[k]] = std::max(col_max[cols[k]], std::abs(vals[k]));
            }
        }
        std::iota(perm.begin(), perm.end(), 0);

        for (Index k = 0; k < n; ++k) {
            Index p = k;
            double best = std::abs(lu[static_cast<std::size_t>(k) * n + k]);
            for (Index i = k + 1; i < n; ++i) {
                const double v = std::abs(lu[static_cast<std::size_t>(i) * n + k]);
                if (v > best) {
                    best = v;
                    p = i;
                }
            }
            if (best == 0.0 || best <= kPivotTolerance * col_max[k]) {
                throw SingularMatrixError("lu: zero pivot in column " + std::to_string(k), k);
            }
            if (p != k) {
                std::swap_ranges(lu.begin() + static_cast<std::ptrdiff_t>(k) * n,
                                 lu.begin() + static_cast<std::ptrdiff_t>(k + 1) * n,
                                 lu.begin() + static_cast<std::ptrdiff_t>(p) * n);
                std::swap(perm[k], perm[p]);
            }
            double* rowk = lu.data() + static_cast<std::size_t>(k) * n;
            const double inv = 1.0 / rowk[k];
            for (Index i = k + 1; i < n; ++i) {
                double* rowi = lu.data() + static_cast<std::size_t>(i) * n;
                if (rowi[k] == 0.0) {
                    continue;
                }
                const double l = rowi[k] * inv;
                rowi[k] = l;
                for (Index j = k + 1; j < n; ++j) {
                    rowi[j] -= l * rowk[j];
                }
            }
        }
    }

    [[nodiscard]] Vector solve(std::span<const double> b) const
    {
        Vector x(n);
        for (Index i = 0; i < n; ++i) {
            x[i] = b[perm[i]];
        }
        for (Index i = 0; i < n; ++i) {
            const double* row = lu.data() + static_cast<std::size_t>(i) * n;
            double s = x[i];
            for (Index j = 0; j < i; ++j) {
                s -= row[j] * x[j];
            }
            x[i] = s;
        }
        for (Index i = n - 1; i >= 0; --i) {
            const double* row = lu.data() + static_cast<std::size_t>(i) * n;
            double s = x[i];
            for (Index j = i + 1; j < n; ++j) {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        return x;
    }
};

// UMFPACK reads the CSR arrays of A as the CSC arrays of A^T; solving with
// UMFPACK_At then gives A x = b.
struct LuFactors::Sparse {
    CsrMatrix matrix;
    void* numeric = nullptr;
    double control[UMFPACK_CONTROL];

    explicit Sparse(const CsrMatrix& a) : matrix(a)
    {
        umfpack_di_defaults(control);
        control[UMFPACK_ORDERING] = UMFPACK_ORDERING_AMD;
        const Index n = matrix.nrows();
        const Index* ap = matrix.row_offsets().data();
        const Index* ai = matrix.col_indices().data();
        const double* ax = matrix.values().data();

        double info[UMFPACK_INFO];
        void* symbolic = nullptr;
        int status = umfpack_di_symbolic(n, n, ap, ai, ax, &symbolic, control, info);
        if (status != UMFPACK_OK) {
            umfpack_di_free_symbolic(&symbolic);
            if (status == UMFPACK_WARNING_singular_matrix) {
                throw SingularMatrixError("lu: structurally singular matrix", -1);
            }
            throw std::runtime_error("lu: symbolic factorization failed, status " +
                                     std::to_string(status));
        }
        status = umfpack_di_numeric(ap, ai, ax, symbolic, &numeric, control, info);
        umfpack_di_free_symbolic(&symbolic);
        if (status == UMFPACK_WARNING_singular_matrix) {
            release();
            throw SingularMatrixError("lu: numerically singular matrix", -1);
        }
        if (status != UMFPACK_OK) {
            release();
            throw std::runtime_error("lu: numeric factorization failed, status " +
                                     std::to_string(status));
        }
        check_pivots();
    }

    ~Sparse() { release(); }

    void release()
    {
        if (numeric != nullptr) {
            umfpack_di_free_numeric(&numeric);
            numeric = nullptr;
        }
    }

    // Pivots of the row-scaled, permuted matrix; relative test against the
    // largest of them.
    void check_pivots()
    {
        const Index n = matrix.nrows();
        std::vector<double> udiag(n);
        const int status = umfpack_di_get_numeric(nullptr, nullptr, nullptr, nullptr, nullptr,
                                                  nullptr, nullptr, nullptr, udiag.data(),
                                                  nullptr, nullptr, numeric);
        if (status != UMFPACK_OK) {
            release();
            throw std::runtime_error("lu: cannot read pivots, status " + std::to_string(status));
        }
        double largest = 0.0;
        for (double d : udiag) {
            largest = std::max(largest, std::abs(d));
        }
        for (Index k = 0; k < n; ++k) {
            if (std::abs(udiag[k]) <= kPivotTolerance * largest) {
                release();
                throw SingularMatrixError("lu: zero pivot at elimination step " + std::to_string(k), k);
            }
        }
    }

    [[nodiscard]] Vector solve(std::span<const double> b) const
    {
        Vector x(matrix.nrows(), 0.0);
        double info[UMFPACK_INFO];
        const int status = umfpack_di_solve(UMFPACK_At, matrix.row_offsets().data(),
                                            matrix.col_indices().data(), matrix.values().data(),
                                            x.data(), b.data(), numeric, control, info);
        if (status != UMFPACK_OK) {
            throw std::runtime_error("lu: solve failed, status " + std::to_string(status));
        }
        return x;
    }
};

LuFactors::LuFactors(const CsrMatrix& a) : n_(a.nrows())
{
    if (a.nrows() != a.ncols()) {
        throw std::invalid_argument("lu: matrix must be square");
    }
    if (n_ < kDenseThreshold) {
        dense_ = std::make_unique<Dense>(a);
    } else {
        sparse_ = std::make_unique<Sparse>(a);
    }
}

LuFactors::~LuFactors() = default;
LuFactors::LuFactors(LuFactors&&) noexcept = default;
LuFactors& LuFactors::operator=(LuFactors&&) noexcept = default;

bool LuFactors::is_dense() const noexcept { return dense_ != nullptr; }

Vector LuFactors::solve(std::span<const double> b) const
{
    if (b.size() != static_cast<std::size_t>(n_)) {
        throw std::invalid_argument("lu: right-hand side length mismatch");
    }
    if (n_ == 0) {
        return {};
    }
    return dense_ ? dense_->solve(b) : sparse_->solve(b);
}

Vector lu_solve(const CsrMatrix& a, std::span<const double> b) { return LuFactors(a).solve(b); }

}  // namespace msfem::linalg

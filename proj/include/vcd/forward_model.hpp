#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <utility>
#include <vector>

#include "vcd/errors.hpp"
#include "vcd/image.hpp"
#include "vcd/light_field.hpp"
#include "vcd/optics.hpp"
#include "vcd/util.hpp"

namespace vcd {

/// Fixed-focus thin-lens eye. The lens focal length is derived from the
/// focus distance and retina depth via 1/f = 1/d_f + 1/d_e.
struct EyeModel {
    double focus_distance = 0.38;
    double retina_depth = 0.025;
    double pupil_diameter = 0.006;

    EyeModel() = default;
    EyeModel(double d_f, double d_e, double pupil)
        : focus_distance(d_f), retina_depth(d_e), pupil_diameter(pupil) {
        if (!(d_f > 0.0) || !(d_e > 0.0) || !(pupil > 0.0))
            throw NumericError("eye model distances and pupil must be positive");
    }

    double focal_length() const { return 1.0 / (1.0 / focus_distance + 1.0 / retina_depth); }
};

/// Viewing geometry for the forward model: display plane distance, retinal
/// sampling window, and the pupil quadrature grid. `retina_extent` is the
/// physical width of the retinal window; its height follows from the pixel
/// aspect (square pixels).
struct SceneGeometry {
    double display_distance = 0.25;
    int retina_cols = 64;
    int retina_rows = 64;
    double retina_extent = 1e-3;
    int aperture_samples_u = 9;
    int aperture_samples_v = 9;

    double retina_extent_y() const {
        return retina_extent * static_cast<double>(retina_rows) / retina_cols;
    }

    void validate() const {
        if (!(display_distance > 0.0)) throw NumericError("display distance must be positive");
        if (retina_cols < 1 || retina_rows < 1) throw NumericError("retina resolution must be >= 1");
        if (!(retina_extent > 0.0)) throw NumericError("retina extent must be positive");
        if (aperture_samples_u < 1 || aperture_samples_v < 1)
            throw NumericError("aperture sample counts must be >= 1");
    }
};

/// Sampling lattice of a display light field. The angular axis is the
/// pupil-plane intercept measured relative to the ray's spatial foot
/// (v = u_pupil - x_display); index a maps to the coordinate
/// angular_center + (a - (n_u-1)/2) * angular_step. The step is signed: its
/// sign states which panel side of a cell serves the positive pupil side.
struct LightFieldGrid {
    int n_x = 64, n_y = 64;
    int n_u = 5, n_v = 5;
    double spatial_pitch = 5e-4;
    double angular_step = 1e-3;
    double angular_center = 0.0;

    double angular_extent() const { return std::abs(angular_step) * n_u; }

    LightField4D make_field(int channels) const {
        return LightField4D(n_x, n_y, n_u, n_v, spatial_pitch, angular_extent(), channels);
    }

    void validate() const {
        if (n_x < 1 || n_y < 1 || n_u < 1 || n_v < 1)
            throw NumericError("light-field grid counts must be >= 1");
        if (!(spatial_pitch > 0.0)) throw NumericError("spatial pitch must be positive");
        if (angular_step == 0.0 || !std::isfinite(angular_step))
            throw NumericError("angular step must be finite and nonzero");
    }
};

/// Physical center of retinal pixel column c (and, with rows, of row r).
/// The raster is mirrored against the scene axes so the stored image appears
/// upright despite the negative optical magnification.
inline double retina_coord(int index, int count, double extent) {
    return (0.5 - (index + 0.5) / static_cast<double>(count)) * extent;
}

/// Uniform aperture_samples grid over the pupil's bounding square masked to
/// the inscribed disc. Returns pupil-plane offsets in meters.
inline std::vector<std::pair<double, double>> pupil_grid(const EyeModel& eye, int s_u, int s_v) {
    std::vector<std::pair<double, double>> pts;
    const double A = eye.pupil_diameter;
    const double r2 = (A / 2.0) * (A / 2.0);
    for (int qv = 0; qv < s_v; ++qv) {
        double pv = ((qv + 0.5) / s_v - 0.5) * A;
        for (int qu = 0; qu < s_u; ++qu) {
            double pu = ((qu + 0.5) / s_u - 0.5) * A;
            if (pu * pu + pv * pv <= r2) pts.emplace_back(pu, pv);
        }
    }
    return pts;
}

/// One-axis linear interpolation taps at fractional grid coordinate f.
struct AxisTaps {
    int i0 = 0, i1 = 0;
    double w0 = 0.0, w1 = 0.0;
    bool inside = false;
};

inline AxisTaps axis_taps(double f, int n) {
    AxisTaps t;
    if (!(f >= 0.0 && f <= static_cast<double>(n - 1))) return t;
    t.inside = true;
    t.i0 = static_cast<int>(f);
    if (t.i0 > n - 1) t.i0 = n - 1;
    t.i1 = std::min(t.i0 + 1, n - 1);
    double d = f - t.i0;
    t.w0 = 1.0 - d;
    t.w1 = d;
    return t;
}

/// Sparse retinal-integration operator: maps a flattened display light field
/// (one channel) to a flattened retinal image. Rows follow the retinal
/// raster row-major; row weights of fully covered rows sum to 1.
class PrefilterMatrix {
  public:
    PrefilterMatrix() = default;
    PrefilterMatrix(int rows, int cols, std::vector<std::size_t> row_ptr,
                    std::vector<int> col_idx, std::vector<double> weights,
                    std::vector<int> coverage, LightFieldGrid grid, SceneGeometry geom)
        : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_(std::move(col_idx)),
          w_(std::move(weights)), coverage_(std::move(coverage)), grid_(grid), geom_(geom) {
        build_transpose();
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t nnz() const { return col_.size(); }
    const LightFieldGrid& grid() const { return grid_; }
    const SceneGeometry& geometry() const { return geom_; }
    int coverage(int row) const { return coverage_[row]; }

    double row_sum(int row) const {
        double s = 0.0;
        for (std::size_t k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k) s += w_[k];
        return s;
    }

    /// Entries of one row as (column, weight) pairs.
    std::vector<std::pair<int, double>> row_entries(int row) const {
        std::vector<std::pair<int, double>> out;
        for (std::size_t k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k)
            out.emplace_back(col_[k], w_[k]);
        return out;
    }

    void apply(const std::vector<double>& x, std::vector<double>& y, int threads = 0) const {
        if (static_cast<int>(x.size()) != cols_) throw NumericError("matvec: size mismatch");
        y.assign(static_cast<std::size_t>(rows_), 0.0);
        parallel_for(static_cast<std::size_t>(rows_), [&](std::size_t r) {
            double acc = 0.0;
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += w_[k] * x[col_[k]];
            y[r] = acc;
        }, threads);
    }

    void apply_transpose(const std::vector<double>& y, std::vector<double>& x,
                         int threads = 0) const {
        if (static_cast<int>(y.size()) != rows_) throw NumericError("matvec^T: size mismatch");
        x.assign(static_cast<std::size_t>(cols_), 0.0);
        parallel_for(static_cast<std::size_t>(cols_), [&](std::size_t c) {
            double acc = 0.0;
            for (std::size_t k = t_ptr_[c]; k < t_ptr_[c + 1]; ++k) acc += t_w_[k] * y[t_row_[k]];
            x[c] = acc;
        }, threads);
    }

  private:
    void build_transpose() {
        t_ptr_.assign(static_cast<std::size_t>(cols_) + 1, 0);
        for (int c : col_) ++t_ptr_[static_cast<std::size_t>(c) + 1];
        for (std::size_t c = 0; c < t_ptr_.size() - 1; ++c) t_ptr_[c + 1] += t_ptr_[c];
        t_row_.resize(col_.size());
        t_w_.resize(col_.size());
        std::vector<std::size_t> fill(t_ptr_.begin(), t_ptr_.end() - 1);
        for (int r = 0; r < rows_; ++r) {
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                std::size_t slot = fill[col_[k]]++;
                t_row_[slot] = r;
                t_w_[slot] = w_[k];
            }
        }
    }

    int rows_ = 0, cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<int> col_;
    std::vector<double> w_;
    std::vector<int> coverage_;
    LightFieldGrid grid_;
    SceneGeometry geom_;
    // transpose (CSC view) for gradient products
    std::vector<std::size_t> t_ptr_;
    std::vector<int> t_row_;
    std::vector<double> t_w_;
};

/// Assembles the retinal-integration operator. For every retinal pixel and
/// every pupil grid point inside the disc, the ray is traced back through
/// the inverted eye transport; the landing point deposits separable linear
/// interpolation weights onto the 16 surrounding light-field samples. Rays
/// landing outside the field contribute nothing and shrink that row's
/// coverage; rows are normalized by coverage.
inline PrefilterMatrix build_prefilter_matrix(const EyeModel& eye, const SceneGeometry& geom,
                                              const LightFieldGrid& grid, int threads = 0) {
    geom.validate();
    grid.validate();
    const RayTransferMatrix M =
        eye_transport(geom.display_distance, eye.focal_length(), eye.retina_depth);
    const RayTransferMatrix Minv = invert(M);
    const auto pupil = pupil_grid(eye, geom.aperture_samples_u, geom.aperture_samples_v);
    if (pupil.empty()) throw NumericError("pupil grid has no samples inside the aperture");

    const int rows = geom.retina_cols * geom.retina_rows;
    const double extent_x = geom.retina_extent;
    const double extent_y = geom.retina_extent_y();

    // Per-axis tables: fractional spatial and angular grid coordinates for
    // every (retinal index, pupil sample) pair. x pairs with pupil u, y with
    // pupil v; the composed weight is the product of the two axes.
    struct AxisEntry {
        double fs = 0.0, fa = 0.0;
        bool inside = false;
    };
    auto fill_axis = [&](int count, double extent, int n_s, int n_a, bool use_v) {
        std::vector<AxisEntry> tab(static_cast<std::size_t>(count) * pupil.size());
        for (int idx = 0; idx < count; ++idx) {
            double x_r = retina_coord(idx, count, extent);
            for (std::size_t q = 0; q < pupil.size(); ++q) {
                double p = use_v ? pupil[q].second : pupil[q].first;
                RayCoord back = apply(Minv, RayCoord{x_r, p});
                double rel = p - back.x;  // pupil intercept relative to the foot
                double fs = back.x / grid.spatial_pitch + (n_s - 1) / 2.0;
                double fa = (rel - grid.angular_center) / grid.angular_step + (n_a - 1) / 2.0;
                AxisEntry& e = tab[static_cast<std::size_t>(idx) * pupil.size() + q];
                e.fs = fs;
                e.fa = fa;
                e.inside = fs >= 0.0 && fs <= n_s - 1 && fa >= 0.0 && fa <= n_a - 1;
            }
        }
        return tab;
    };
    const auto tab_x = fill_axis(geom.retina_cols, extent_x, grid.n_x, grid.n_u, false);
    const auto tab_y = fill_axis(geom.retina_rows, extent_y, grid.n_y, grid.n_v, true);

    std::vector<std::vector<std::pair<int, double>>> row_entries(rows);
    std::vector<int> coverage(rows, 0);
    parallel_for(static_cast<std::size_t>(rows), [&](std::size_t row) {
        const int r = static_cast<int>(row) / geom.retina_cols;
        const int c = static_cast<int>(row) % geom.retina_cols;
        std::vector<std::pair<int, double>> taps;
        taps.reserve(pupil.size() * 16);
        int cov = 0;
        for (std::size_t q = 0; q < pupil.size(); ++q) {
            const AxisEntry& ex = tab_x[static_cast<std::size_t>(c) * pupil.size() + q];
            const AxisEntry& ey = tab_y[static_cast<std::size_t>(r) * pupil.size() + q];
            if (!ex.inside || !ey.inside) continue;
            ++cov;
            AxisTaps tx = axis_taps(ex.fs, grid.n_x);
            AxisTaps ty = axis_taps(ey.fs, grid.n_y);
            AxisTaps ta = axis_taps(ex.fa, grid.n_u);
            AxisTaps tb = axis_taps(ey.fa, grid.n_v);
            const int is[2] = {tx.i0, tx.i1};
            const double ws[2] = {tx.w0, tx.w1};
            const int js[2] = {ty.i0, ty.i1};
            const double wjs[2] = {ty.w0, ty.w1};
            const int as[2] = {ta.i0, ta.i1};
            const double was[2] = {ta.w0, ta.w1};
            const int bs[2] = {tb.i0, tb.i1};
            const double wbs[2] = {tb.w0, tb.w1};
            for (int jj = 0; jj < 2; ++jj)
                for (int ii = 0; ii < 2; ++ii)
                    for (int bb = 0; bb < 2; ++bb)
                        for (int aa = 0; aa < 2; ++aa) {
                            double w = ws[ii] * wjs[jj] * was[aa] * wbs[bb];
                            if (w <= 0.0) continue;
                            int col = static_cast<int>(
                                ((static_cast<std::size_t>(js[jj]) * grid.n_x + is[ii]) * grid.n_v +
                                 bs[bb]) * grid.n_u + as[aa]);
                            taps.emplace_back(col, w);
                        }
        }
        coverage[row] = cov;
        if (cov == 0) return;
        std::sort(taps.begin(), taps.end(),
                  [](const auto& l, const auto& rgt) { return l.first < rgt.first; });
        auto& out = row_entries[row];
        const double scale = 1.0 / cov;
        for (const auto& [colIdx, w] : taps) {
            if (!out.empty() && out.back().first == colIdx)
                out.back().second += w * scale;
            else
                out.emplace_back(colIdx, w * scale);
        }
    }, threads);

    bool any = false;
    for (int r = 0; r < rows; ++r)
        if (coverage[r] > 0) any = true;
    if (!any) throw NumericError("degenerate geometry: no retinal ray reaches the light field");

    std::vector<std::size_t> row_ptr(static_cast<std::size_t>(rows) + 1, 0);
    for (int r = 0; r < rows; ++r) row_ptr[r + 1] = row_ptr[r] + row_entries[r].size();
    std::vector<int> col_idx(row_ptr[rows]);
    std::vector<double> weights(row_ptr[rows]);
    for (int r = 0; r < rows; ++r) {
        std::size_t k = row_ptr[r];
        for (const auto& [colIdx, w] : row_entries[r]) {
            col_idx[k] = colIdx;
            weights[k] = w;
            ++k;
        }
    }
    const std::size_t cols = grid.make_field(1).samples_per_channel();
    return PrefilterMatrix(rows, static_cast<int>(cols), std::move(row_ptr), std::move(col_idx),
                           std::move(weights), std::move(coverage), grid, geom);
}

/// Retinal image from a display light field: one sparse product per channel.
inline Image simulate_retina(const PrefilterMatrix& P, const LightField4D& lf, int threads = 0) {
    if (static_cast<int>(lf.samples_per_channel()) != P.cols())
        throw NumericError("simulate_retina: light field shape does not match operator");
    const SceneGeometry& geom = P.geometry();
    Image out(geom.retina_cols, geom.retina_rows, lf.channels);
    std::vector<double> x(lf.samples_per_channel());
    std::vector<double> y;
    for (int ch = 0; ch < lf.channels; ++ch) {
        for (std::size_t s = 0; s < x.size(); ++s) x[s] = lf.radiance[s * lf.channels + ch];
        P.apply(x, y, threads);
        for (int r = 0; r < geom.retina_rows; ++r)
            for (int c = 0; c < geom.retina_cols; ++c)
                out.at(r, c, ch) = y[static_cast<std::size_t>(r) * geom.retina_cols + c];
    }
    return out;
}

/// Text dump: header "rows cols nnz", then one "row col weight" triple per
/// line in row-major order.
inline void write_prefilter_triplets(const PrefilterMatrix& P, std::ostream& os) {
    os << P.rows() << ' ' << P.cols() << ' ' << P.nnz() << '\n';
    for (int r = 0; r < P.rows(); ++r)
        for (const auto& [c, w] : P.row_entries(r)) os << r << ' ' << c << ' ' << w << '\n';
}

}  // namespace vcd

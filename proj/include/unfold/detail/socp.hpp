#pragma once

// Dense primal-dual interior-point method for linear + second-order cone
// programs in the standard form
//
//     minimize    c'x
//     subject to  G x + s = h,   s in K = R^l_+ x Q^{k_1} x ... x Q^{k_r}
//                 E x = b
//
// solved through the homogeneous self-dual embedding with Nesterov-Todd
// scaling and a Mehrotra predictor-corrector. The reduced KKT system is
// factored densely; linear inequality rows are kept sparse.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace unfold::detail {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct StandardForm {
    Vec c;
    SpMat G_lin;
    Vec h_lin;
    std::vector<Mat> G_soc;
    std::vector<Vec> h_soc;
    SpMat E;
    Vec b;

    Index num_vars() const { return c.size(); }
    Index num_lin() const { return G_lin.rows(); }
    Index num_eq() const { return E.rows(); }
    Index cone_size() const {
        Index m = num_lin();
        for (const auto& g : G_soc) m += g.rows();
        return m;
    }
};

enum class IpmStatus { optimal, primal_infeasible, dual_infeasible, numerical_failure };

struct IpmSettings {
    double feastol = 1e-9;
    double abstol = 1e-9;
    double reltol = 1e-9;
    // accepted when the iteration stalls before reaching the tight targets
    double feastol_inaccurate = 1e-6;
    double abstol_inaccurate = 1e-6;
    double reltol_inaccurate = 1e-6;
    int max_iterations = 150;
    double step_fraction = 0.99;
};

struct IpmResult {
    IpmStatus status = IpmStatus::numerical_failure;
    Vec x, y, z, s;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double achieved_tolerance = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

namespace soc {

// Jordan product u o v for one Lorentz block.
inline Vec product(const Eigen::Ref<const Vec>& u, const Eigen::Ref<const Vec>& v) {
    Vec r(u.size());
    r(0) = u.dot(v);
    r.tail(u.size() - 1) = u(0) * v.tail(v.size() - 1) + v(0) * u.tail(u.size() - 1);
    return r;
}

// Solves u o x = w for x.
inline Vec divide(const Eigen::Ref<const Vec>& u, const Eigen::Ref<const Vec>& w) {
    const Index k = u.size();
    const double u1w1 = u.tail(k - 1).dot(w.tail(k - 1));
    const double nu1 = u.tail(k - 1).norm();
    const double det = (u(0) - nu1) * (u(0) + nu1);
    Vec x(k);
    x(0) = (u(0) * w(0) - u1w1) / det;
    x.tail(k - 1) = (w.tail(k - 1) - x(0) * u.tail(k - 1)) / u(0);
    return x;
}

// u0^2 - |u1|^2 computed without cancellation.
inline double jnorm2(const Eigen::Ref<const Vec>& u) {
    const double n1 = u.tail(u.size() - 1).norm();
    return (u(0) - n1) * (u(0) + n1);
}

// Smallest t with u + t e in the cone (negative when u is interior).
inline double interior_margin(const Eigen::Ref<const Vec>& u) {
    return u.tail(u.size() - 1).norm() - u(0);
}

// Largest step a >= 0 keeping u + a du inside the cone, u interior.
inline double max_step(const Eigen::Ref<const Vec>& u, const Eigen::Ref<const Vec>& du) {
    const Index k = u.size();
    const double a = jnorm2(du);
    const double bh = u(0) * du(0) - u.tail(k - 1).dot(du.tail(k - 1));
    const double c = jnorm2(u);
    constexpr double inf = std::numeric_limits<double>::infinity();
    // q(t) = a t^2 + 2 bh t + c, q(0) = c > 0
    if (c <= 0.0) return 0.0;
    double tmax = inf;
    if (std::abs(a) <= 1e-300) {
        if (bh < 0.0) tmax = -c / (2.0 * bh);
    } else {
        const double disc = bh * bh - a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            const double q = -(bh + std::copysign(sq, bh));
            const double r1 = q / a;
            const double r2 = (q != 0.0) ? c / q : inf;
            for (double r : {r1, r2})
                if (r > 0.0) tmax = std::min(tmax, r);
        }
    }
    // the first component must also stay positive
    if (du(0) < 0.0) tmax = std::min(tmax, -u(0) / du(0));
    return tmax;
}

}  // namespace soc

// Nesterov-Todd scaling for one Lorentz block.
struct SocScaling {
    double eta = 1.0;
    Vec wbar;  // hyperbolic unit vector with W^2 = eta^2 (2 wbar wbar' - J)
    Vec v;     // W = eta (2 v v' - J)

    static SocScaling identity(Index k) {
        SocScaling sc;
        sc.eta = 1.0;
        sc.wbar = Vec::Zero(k);
        sc.wbar(0) = 1.0;
        sc.v = sc.wbar;
        return sc;
    }

    static SocScaling from(const Eigen::Ref<const Vec>& s, const Eigen::Ref<const Vec>& z) {
        const Index k = s.size();
        const double sn = std::sqrt(soc::jnorm2(s));
        const double zn = std::sqrt(soc::jnorm2(z));
        Vec sb = s / sn;
        Vec zb = z / zn;
        const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
        SocScaling sc;
        sc.eta = std::sqrt(sn / zn);
        sc.wbar.resize(k);
        sc.wbar(0) = (sb(0) + zb(0)) / (2.0 * gamma);
        sc.wbar.tail(k - 1) = (sb.tail(k - 1) - zb.tail(k - 1)) / (2.0 * gamma);
        sc.v = sc.wbar;
        sc.v(0) += 1.0;
        sc.v /= std::sqrt(2.0 * (sc.wbar(0) + 1.0));
        return sc;
    }

    static Vec apply_j(const Eigen::Ref<const Vec>& u) {
        Vec r = -u;
        r(0) = u(0);
        return r;
    }

    Vec apply(const Eigen::Ref<const Vec>& u) const {  // W u
        return eta * (2.0 * v.dot(u) * v - apply_j(u));
    }
    Vec apply_inverse(const Eigen::Ref<const Vec>& u) const {  // W^{-1} u
        Vec jv = apply_j(v);
        return (2.0 * jv.dot(u) * jv - apply_j(u)) / eta;
    }
    Vec apply_square(const Eigen::Ref<const Vec>& u) const {  // W^2 u
        return eta * eta * (2.0 * wbar.dot(u) * wbar - apply_j(u));
    }
    Vec apply_inverse_square(const Eigen::Ref<const Vec>& u) const {  // W^{-2} u
        Vec jw = apply_j(wbar);
        return (2.0 * jw.dot(u) * jw - apply_j(u)) / (eta * eta);
    }
};

class ConeSolver {
public:
    ConeSolver(const StandardForm& p, IpmSettings settings)
        : p_(p), settings_(settings), n_(p.num_vars()), l_(p.num_lin()), neq_(p.num_eq()) {
        offsets_.push_back(l_);
        for (const auto& g : p_.G_soc) offsets_.push_back(offsets_.back() + g.rows());
        m_ = offsets_.back();
        degree_ = static_cast<double>(l_ + static_cast<Index>(p_.G_soc.size()));
        h_.resize(m_);
        if (l_ > 0) h_.head(l_) = p_.h_lin;
        for (std::size_t b = 0; b < p_.G_soc.size(); ++b)
            h_.segment(offsets_[b], p_.G_soc[b].rows()) = p_.h_soc[b];
        Gt_lin_ = p_.G_lin.transpose();
        // G_b' J G_b is iteration-invariant
        for (const auto& Gb : p_.G_soc) {
            Mat q = -Gb.bottomRows(Gb.rows() - 1).transpose() * Gb.bottomRows(Gb.rows() - 1);
            q.noalias() += Gb.row(0).transpose() * Gb.row(0);
            soc_gram_.push_back(std::move(q));
        }
        scale_ = 1.0 + std::max({p_.c.lpNorm<Eigen::Infinity>(), h_.size() ? h_.lpNorm<Eigen::Infinity>() : 0.0,
                                 p_.b.size() ? p_.b.lpNorm<Eigen::Infinity>() : 0.0});
    }

    IpmResult run() {
        IpmResult res;
        if (!initialize()) {
            res.status = IpmStatus::numerical_failure;
            return res;
        }
        const double bnorm = 1.0 + (neq_ ? p_.b.norm() : 0.0);
        const double hnorm = 1.0 + h_.norm();
        const double cnorm = 1.0 + p_.c.norm();

        double best_tol = std::numeric_limits<double>::infinity();
        int since_best = 0;
        for (int it = 0; it <= settings_.max_iterations; ++it) {
            res.iterations = it;
            // residuals of the embedding
            Vec Gx = apply_G(x_);
            Vec Gtz = apply_Gt(z_);
            Vec r1 = Gtz + p_.c * tau_;
            Vec r2;
            if (neq_) {
                r1.noalias() += p_.E.transpose() * y_;
                r2 = p_.b * tau_ - p_.E * x_;
            } else {
                r2 = Vec::Zero(0);
            }
            Vec r3 = h_ * tau_ - Gx - s_;
            const double cx = p_.c.dot(x_);
            const double by = neq_ ? p_.b.dot(y_) : 0.0;
            const double hz = h_.dot(z_);
            const double r4 = -cx - by - hz - kappa_;
            const double sz = s_.dot(z_);
            const double mu = (sz + tau_ * kappa_) / (degree_ + 1.0);

            // convergence tests
            const double pres = std::max(neq_ ? r2.norm() / tau_ / bnorm : 0.0, r3.norm() / tau_ / hnorm);
            const double dres = r1.norm() / tau_ / cnorm;
            const double pcost = cx / tau_;
            const double dcost = -(by + hz) / tau_;
            const double gap = sz / (tau_ * tau_);
            double relgap = std::numeric_limits<double>::infinity();
            if (pcost < 0.0)
                relgap = gap / -pcost;
            else if (dcost > 0.0)
                relgap = gap / dcost;
            const double gap_scaled = gap / scale_;
            const double merit = std::max({pres, dres, std::min(gap_scaled, relgap)});
            if (merit < best_tol) {
                best_tol = merit;
                best_ = Snapshot{x_, y_, z_, s_, tau_, kappa_};
                since_best = 0;
            } else if (++since_best >= 8 && best_tol < settings_.feastol_inaccurate) {
                break;
            }
            if (pres < settings_.feastol && dres < settings_.feastol &&
                (gap_scaled < settings_.abstol || relgap < settings_.reltol)) {
                finish(res, IpmStatus::optimal, std::max({pres, dres, std::min(gap_scaled, relgap)}));
                return res;
            }
            // infeasibility certificates
            if (by + hz < 0.0) {
                Vec ry = Gtz;
                if (neq_) ry.noalias() += p_.E.transpose() * y_;
                if (ry.norm() / -(by + hz) < settings_.feastol && kappa_ > tau_ * 1e-3) {
                    res.status = IpmStatus::primal_infeasible;
                    res.iterations = it;
                    return res;
                }
            }
            if (cx < 0.0) {
                double rr = (Gx + s_).norm();
                if (neq_) rr = std::max(rr, (p_.E * x_).norm());
                if (rr / -cx < settings_.feastol && kappa_ > tau_ * 1e-3) {
                    res.status = IpmStatus::dual_infeasible;
                    res.x = x_ / -cx;
                    res.iterations = it;
                    return res;
                }
            }
            if (it == settings_.max_iterations) break;

            // scaling and factorization
            compute_scaling();
            if (!factor()) break;
            Vec lam = scaled_point();

            Vec u1x, u1y, u1z;
            {
                Vec bz = h_;
                Vec by_rhs = neq_ ? Vec(p_.b) : Vec::Zero(0);
                solve_kkt(-p_.c, by_rhs, bz, u1x, u1y, u1z);
            }
            const double denom_u1 = p_.c.dot(u1x) + (neq_ ? p_.b.dot(u1y) : 0.0) + h_.dot(u1z) - kappa_ / tau_;

            // predictor
            Vec xi_aff = -lam;
            Direction aff = direction(1.0, xi_aff, -tau_ * kappa_, r1, r2, r3, r4, u1x, u1y, u1z, denom_u1);
            const double alpha_aff = std::min(1.0, max_step(aff));
            double sigma = std::pow(1.0 - alpha_aff, 3);
            sigma = std::clamp(sigma, 0.0, 1.0);

            // corrector
            Vec ws = apply_Winv(aff.ds);
            Vec wz = apply_W(aff.dz);
            Vec target = cone_product(lam, lam);
            target = -target - cone_product(ws, wz);
            add_identity(target, sigma * mu);
            Vec xi = cone_divide(lam, target);
            const double t_comb = sigma * mu - tau_ * kappa_ - aff.dtau * aff.dkappa;
            Direction dir = direction(1.0 - sigma, xi, t_comb, r1, r2, r3, r4, u1x, u1y, u1z, denom_u1);
            const double alpha = std::min(1.0, settings_.step_fraction * max_step(dir));
            if (!(alpha > 1e-12) || !dir.finite()) break;

            x_ += alpha * dir.dx;
            if (neq_) y_ += alpha * dir.dy;
            z_ += alpha * dir.dz;
            s_ += alpha * dir.ds;
            tau_ += alpha * dir.dtau;
            kappa_ += alpha * dir.dkappa;
        }

        // stalled: fall back to the best iterate and accept it when good enough
        if (best_) {
            x_ = best_->x;
            y_ = best_->y;
            z_ = best_->z;
            s_ = best_->s;
            tau_ = best_->tau;
            kappa_ = best_->kappa;
        }
        const double pres = primal_residual(bnorm, hnorm);
        const double dres = dual_residual(cnorm);
        const double pcost = p_.c.dot(x_) / tau_;
        const double dcost = -((neq_ ? p_.b.dot(y_) : 0.0) + h_.dot(z_)) / tau_;
        const double gap = s_.dot(z_) / (tau_ * tau_);
        double relgap = std::numeric_limits<double>::infinity();
        if (pcost < 0.0)
            relgap = gap / -pcost;
        else if (dcost > 0.0)
            relgap = gap / dcost;
        if (pres < settings_.feastol_inaccurate && dres < settings_.feastol_inaccurate &&
            (gap / scale_ < settings_.abstol_inaccurate || relgap < settings_.reltol_inaccurate)) {
            finish(res, IpmStatus::optimal, std::max({pres, dres, std::min(gap / scale_, relgap)}));
            return res;
        }
        res.status = IpmStatus::numerical_failure;
        res.achieved_tolerance = best_tol;
        return res;
    }

private:
    struct Snapshot {
        Vec x, y, z, s;
        double tau, kappa;
    };
    std::optional<Snapshot> best_;

    struct Direction {
        Vec dx, dy, dz, ds;
        double dtau = 0.0, dkappa = 0.0;
        bool finite() const {
            return dx.allFinite() && dz.allFinite() && ds.allFinite() && std::isfinite(dtau) &&
                   std::isfinite(dkappa) && (dy.size() == 0 || dy.allFinite());
        }
    };

    void finish(IpmResult& res, IpmStatus st, double tol) const {
        res.status = st;
        res.x = x_ / tau_;
        res.y = neq_ ? Vec(y_ / tau_) : Vec();
        res.z = z_ / tau_;
        res.s = s_ / tau_;
        res.primal_objective = p_.c.dot(res.x);
        res.dual_objective = -((neq_ ? p_.b.dot(res.y) : 0.0) + h_.dot(res.z));
        res.achieved_tolerance = tol;
    }

    double primal_residual(double bnorm, double hnorm) const {
        Vec r3 = h_ * tau_ - apply_G(x_) - s_;
        double pr = r3.norm() / tau_ / hnorm;
        if (neq_) pr = std::max(pr, (p_.b * tau_ - p_.E * x_).norm() / tau_ / bnorm);
        return pr;
    }
    double dual_residual(double cnorm) const {
        Vec r1 = apply_Gt(z_) + p_.c * tau_;
        if (neq_) r1.noalias() += p_.E.transpose() * y_;
        return r1.norm() / tau_ / cnorm;
    }

    Index block_size(std::size_t b) const { return p_.G_soc[b].rows(); }

    Vec apply_G(const Vec& x) const {
        Vec r(m_);
        if (l_ > 0) r.head(l_) = p_.G_lin * x;
        for (std::size_t b = 0; b < p_.G_soc.size(); ++b) r.segment(offsets_[b], block_size(b)).noalias() = p_.G_soc[b] * x;
        return r;
    }
    Vec apply_Gt(const Vec& z) const {
        Vec r = Vec::Zero(n_);
        if (l_ > 0) r.noalias() += Gt_lin_ * z.head(l_);
        for (std::size_t b = 0; b < p_.G_soc.size(); ++b)
            r.noalias() += p_.G_soc[b].transpose() * z.segment(offsets_[b], block_size(b));
        return r;
    }

    template <class F>
    Vec blockwise(const Vec& u, const Vec& lin_factor, F&& soc_op) const {
        Vec r(m_);
        if (l_ > 0) r.head(l_) = lin_factor.cwiseProduct(u.head(l_));
        for (std::size_t b = 0; b < p_.G_soc.size(); ++b)
            r.segment(offsets_[b], block_size(b)) = soc_op(b, u.segment(offsets_[b], block_size(b)));
        return r;
    }
    Vec apply_W(const Vec& u) const {
        return blockwise(u, lin_d_, [&](std::size_t b, const Eigen::Ref<const Vec>& ub) { return soc_sc_[b].apply(ub); });
    }
    Vec apply_Winv(const Vec& u) const {
        Vec inv = lin_d_.cwiseInverse();
        return blockwise(u, inv, [&](std::size_t b, const Eigen::Ref<const Vec>& ub) { return soc_sc_[b].apply_inverse(ub); });
    }
    Vec apply_W2(const Vec& u) const {
        Vec sq = lin_d_.cwiseAbs2();
        return blockwise(u, sq, [&](std::size_t b, const Eigen::Ref<const Vec>& ub) { return soc_sc_[b].apply_square(ub); });
    }
    Vec apply_Winv2(const Vec& u) const {
        Vec isq = lin_d_.cwiseAbs2().cwiseInverse();
        return blockwise(u, isq,
                         [&](std::size_t b, const Eigen::Ref<const Vec>& ub) { return soc_sc_[b].apply_inverse_square(ub); });
    }

    Vec cone_product(const Vec& u, const Vec& v) const {
        Vec r(m_);
        if (l_ > 0) r.head(l_) = u.head(l_).cwiseProduct(v.head(l_));
        for (std::size_t b = 0; b < p_.G_soc.size(); ++b)
            r.segment(offsets_[b], block_size(b)) =
                soc::product(u.segment(offsets_[b], block_size(b)), v.segment(offsets_[b], block_size(b)));
        return r;
    }
    Vec cone_divide(const Vec& u, const Vec& w) const {
        Vec r(m_);
        if (l_ > 0) r.head(l_) = w.head(l_).cwiseQuotient(u.head(l_));
        for (std::size_t b = 0; b < p_.G_soc.size(); ++b)
            r.segment(offsets_[b], block_size(b)) =
                soc::divide(u.segment(offsets_[b], block_size(b)), w.segment(offsets_[b], block_size(b)));
        return r;
    }
    void add_identity(Vec& u, double a) const {
        if (l_ > 0) u.head(l_).array() += a;
        for (std::size_t b = 0; b < p_.G_soc.size(); ++b) u(offsets_[b]) += a;
    }
    double cone_max_step(const Vec& u, const Vec& du) const {
        double t = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < l_; ++i)
            if (du(i) < 0.0) t = std::min(t, -u(i) / du(i));
        for (std::size_t b = 0; b < p_.G_soc.size(); ++b)
            t = std::min(t, soc::max_step(u.segment(offsets_[b], block_size(b)), du.segment(offsets_[b], block_size(b))));
        return t;
    }
    double max_step(const Direction& d) const {
        double t = std::min(cone_max_step(s_, d.ds), cone_max_step(z_, d.dz));
        if (d.dtau < 0.0) t = std::min(t, -tau_ / d.dtau);
        if (d.dkappa < 0.0) t = std::min(t, -kappa_ / d.dkappa);
        return t;
    }
    // shift u into the interior as in the standard cone LP initialization
    void shift_interior(Vec& u) const {
        double margin = -std::numeric_limits<double>::infinity();
        for (Index i = 0; i < l_; ++i) margin = std::max(margin, -u(i));
        for (std::size_t b = 0; b < p_.G_soc.size(); ++b)
            margin = std::max(margin, soc::interior_margin(u.segment(offsets_[b], block_size(b))));
        if (margin >= 0.0) add_identity(u, 1.0 + margin);
    }

    Vec scaled_point() const { return apply_W(z_); }

    void compute_scaling() {
        lin_d_.resize(l_);
        for (Index i = 0; i < l_; ++i) lin_d_(i) = std::sqrt(s_(i) / z_(i));
        soc_sc_.clear();
        for (std::size_t b = 0; b < p_.G_soc.size(); ++b)
            soc_sc_.push_back(SocScaling::from(s_.segment(offsets_[b], block_size(b)), z_.segment(offsets_[b], block_size(b))));
    }
    void identity_scaling() {
        lin_d_ = Vec::Ones(l_);
        soc_sc_.clear();
        for (std::size_t b = 0; b < p_.G_soc.size(); ++b) soc_sc_.push_back(SocScaling::identity(block_size(b)));
    }

    bool factor() {
        Mat H = Mat::Zero(n_, n_);
        if (l_ > 0) {
            Vec dinv2 = lin_d_.cwiseAbs2().cwiseInverse();
            SpMat scaled = dinv2.asDiagonal() * p_.G_lin;
            H += Mat(Gt_lin_ * scaled);
        }
        for (std::size_t b = 0; b < p_.G_soc.size(); ++b) {
            const auto& sc = soc_sc_[b];
            Vec jw = SocScaling::apply_j(sc.wbar);
            Vec g = p_.G_soc[b].transpose() * jw;
            const double inv_eta2 = 1.0 / (sc.eta * sc.eta);
            H.noalias() -= inv_eta2 * soc_gram_[b];
            H.noalias() += (2.0 * inv_eta2) * g * g.transpose();
        }
        const double diag_max = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
        reg_ = 1e-13 * diag_max;
        H.diagonal().array() += reg_;
        llt_.compute(H);
        if (llt_.info() != Eigen::Success) return false;
        if (neq_) {
            Mat Et = Mat(p_.E.transpose());
            HinvEt_ = llt_.solve(Et);
            Mat S = Mat(p_.E * HinvEt_);
            const double sdiag = std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
            S.diagonal().array() += 1e-13 * sdiag;
            schur_.compute(S);
            if (schur_.info() != Eigen::Success) return false;
        }
        return true;
    }

    void solve_reduced(const Vec& bx, const Vec& by, const Vec& bz, Vec& dx, Vec& dy, Vec& dz) const {
        Vec r1 = bx + apply_Gt(apply_Winv2(bz));
        if (neq_) {
            Vec hr = llt_.solve(r1);
            dy = schur_.solve(p_.E * hr - by);
            dx = hr - HinvEt_ * dy;
        } else {
            dx = llt_.solve(r1);
            dy = Vec::Zero(0);
        }
        dz = apply_Winv2(apply_G(dx) - bz);
    }

    // [0 E' G'; E 0 0; G 0 -W^2] [dx; dy; dz] = [bx; by; bz]
    void solve_kkt(const Vec& bx, const Vec& by, const Vec& bz, Vec& dx, Vec& dy, Vec& dz) const {
        solve_reduced(bx, by, bz, dx, dy, dz);
        const double bn = 1.0 + std::max({bx.lpNorm<Eigen::Infinity>(), by.size() ? by.lpNorm<Eigen::Infinity>() : 0.0,
                                          bz.lpNorm<Eigen::Infinity>()});
        for (int ref = 0; ref < 3; ++ref) {
            Vec ex = bx - apply_Gt(dz);
            Vec ey;
            if (neq_) {
                ex.noalias() -= p_.E.transpose() * dy;
                ey = by - p_.E * dx;
            } else {
                ey = Vec::Zero(0);
            }
            Vec ez = bz - apply_G(dx) + apply_W2(dz);
            const double err = std::max({ex.lpNorm<Eigen::Infinity>(), ey.size() ? ey.lpNorm<Eigen::Infinity>() : 0.0,
                                         ez.lpNorm<Eigen::Infinity>()});
            if (!(err > 1e-14 * bn)) break;
            Vec cx, cy, cz;
            solve_reduced(ex, ey, ez, cx, cy, cz);
            dx += cx;
            if (neq_) dy += cy;
            dz += cz;
        }
    }

    Direction direction(double eta, const Vec& xi, double t, const Vec& r1, const Vec& r2, const Vec& r3, double r4,
                        const Vec& u1x, const Vec& u1y, const Vec& u1z, double denom_u1) const {
        Direction d;
        Vec wxi = apply_W(xi);
        Vec u0x, u0y, u0z;
        solve_kkt(-eta * r1, eta * r2, eta * r3 - wxi, u0x, u0y, u0z);
        const double num = eta * r4 - t / tau_ -
                           (p_.c.dot(u0x) + (neq_ ? p_.b.dot(u0y) : 0.0) + h_.dot(u0z));
        d.dtau = num / denom_u1;
        d.dx = u0x + d.dtau * u1x;
        d.dy = neq_ ? Vec(u0y + d.dtau * u1y) : Vec::Zero(0);
        d.dz = u0z + d.dtau * u1z;
        d.ds = apply_W(xi - apply_W(d.dz));
        d.dkappa = (t - kappa_ * d.dtau) / tau_;
        return d;
    }

    bool initialize() {
        identity_scaling();
        if (!factor()) return false;
        Vec px, py, pz, dx, dy, dz;
        Vec zero_n = Vec::Zero(n_);
        Vec by = neq_ ? Vec(p_.b) : Vec::Zero(0);
        solve_kkt(zero_n, by, h_, px, py, pz);
        solve_kkt(-p_.c, Vec::Zero(neq_), Vec::Zero(m_), dx, dy, dz);
        if (!px.allFinite() || !dz.allFinite()) return false;
        x_ = px;
        s_ = -pz;
        y_ = neq_ ? dy : Vec::Zero(0);
        z_ = dz;
        shift_interior(s_);
        shift_interior(z_);
        tau_ = 1.0;
        kappa_ = 1.0;
        return true;
    }

    const StandardForm& p_;
    IpmSettings settings_;
    Index n_, l_, neq_, m_ = 0;
    std::vector<Index> offsets_;
    double degree_ = 0.0;
    double scale_ = 1.0;
    Vec h_;
    SpMat Gt_lin_;
    std::vector<Mat> soc_gram_;

    Vec x_, y_, z_, s_;
    double tau_ = 1.0, kappa_ = 1.0;

    Vec lin_d_;
    std::vector<SocScaling> soc_sc_;
    double reg_ = 0.0;
    Eigen::LLT<Mat> llt_;
    Mat HinvEt_;
    Eigen::LLT<Mat> schur_;
};

inline IpmResult solve_standard_form(const StandardForm& p, const IpmSettings& settings) {
    ConeSolver solver(p, settings);
    return solver.run();
}

}  // namespace unfold::detail

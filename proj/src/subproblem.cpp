#include "urllc/subproblem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string_view>

#include <Eigen/Dense>

#include "urllc/fbl.hpp"
#include "urllc/model.hpp"

namespace urllc::subproblem {

const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::MaxIter: return "max_iter";
    }
    return "unknown";
}

double perspective_rate(double assign, double power, double gain) {
    if (assign <= 0.0) return 0.0;
    return assign * std::log1p(gain * power / assign) / std::numbers::ln2;
}

double taylor_sqrt_bound(double x, double anchor) {
    if (!(anchor > 0.0)) throw std::domain_error("taylor_sqrt_bound: anchor must be positive");
    return (x + anchor) / (2.0 * std::sqrt(anchor));
}

void validate(const ConvexSubproblem& sp) {
    const GridDims& d = sp.dims();
    if (d.size() == 0) throw std::invalid_argument("subproblem: empty grid");
    if (sp.weights.dims() != d || sp.eligible.dims() != d)
        throw std::invalid_argument("subproblem: tensor dimensions differ");
    if (sp.payload_bits.size() != d.users || sp.q_factor.size() != d.users || sp.taylor_anchor.size() != d.users)
        throw std::invalid_argument("subproblem: per-user vectors must have K entries");
    if (!(sp.p_max > 0.0)) throw std::invalid_argument("subproblem: p_max must be positive");
    for (std::size_t k = 0; k < d.users; ++k) {
        if (!(sp.taylor_anchor[k] > 0.0)) throw std::invalid_argument("subproblem: Taylor anchors must be positive");
        if (!(sp.payload_bits[k] >= 0.0) || !(sp.q_factor[k] >= 0.0))
            throw std::invalid_argument("subproblem: payload and q_factor must be nonnegative");
    }
    for (double w : sp.weights.data())
        if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("subproblem: weights must be positive");
    for (double c : sp.gains.data())
        if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("subproblem: gains must be nonnegative");
}

ConvexSubproblem build(const ProblemInstance& inst, std::span<const double> anchors, const Tensor3<double>& weights) {
    const GridDims& d = inst.dims();
    ConvexSubproblem sp;
    sp.gains = inst.gains;
    sp.weights = weights;
    sp.p_max = inst.p_max_watts;
    sp.eligible = Tensor3<std::uint8_t>(d, 0);
    for (std::size_t m = 0; m < d.freq_bins; ++m)
        for (std::size_t n = 0; n < d.slots; ++n)
            for (std::size_t k = 0; k < d.users; ++k) sp.eligible(m, n, k) = inst.eligible(n, k) ? 1 : 0;
    for (std::size_t k = 0; k < d.users; ++k) {
        sp.payload_bits.push_back(inst.qos[k].payload_bits);
        sp.q_factor.push_back(fbl::penalty_factor(inst.qos[k].error_prob));
        sp.taylor_anchor.push_back(anchors[k]);
    }
    validate(sp);
    return sp;
}

double rate_constraint_value(const ConvexSubproblem& sp, const Tensor3<double>& assign, const Tensor3<double>& power,
                             std::size_t k) {
    const GridDims& d = sp.dims();
    double rate = 0.0;
    double x = 0.0;
    for (std::size_t m = 0; m < d.freq_bins; ++m)
        for (std::size_t n = 0; n < d.slots; ++n) {
            rate += perspective_rate(assign(m, n, k), power(m, n, k), sp.gains(m, n, k));
            x += assign(m, n, k);
        }
    return rate - taylor_sqrt_bound(x, sp.taylor_anchor[k]) * sp.q_factor[k] - sp.payload_bits[k];
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLn2 = std::numbers::ln2;
// Late on the path the computed direction is only as good as the slacks
// resolve. When no descent is possible any more, a squared decrement below
// this still counts as centered: stationarity is then at most half of 1/t.
constexpr double kNoiseDecrement = 0.25;

struct Entry {
    std::size_t offset;  // into the [M][N][K] tensors
    std::size_t user;    // index into the active user list
    double gain;         // c * p_max
    double weight;
};

struct Block {
    std::size_t first;  // first entry
    std::size_t count;
};

struct User {
    std::size_t k;
    std::vector<std::size_t> entries;
    double payload;
    double q_slope;    // q_factor / (2 sqrt(x0))
    double q_const;    // q_factor * x0 / (2 sqrt(x0))
};

// Interior-point state. Per eligible entry z holds [I, p, tau] with p in units
// of p_max (so c * p is unchanged) and tau a lower bound on the entry's rate
// in nats, tau <= I ln(1 + c p / I). The rate constraints are then linear in
// (I, tau), and each entry carries the exponential-cone barrier
// -log(I ln(1 + c p / I) - tau) - log(I + c p) - log I, which keeps the whole
// barrier self-concordant. In phase 1 an auxiliary slack s is added to every
// rate constraint.
class BarrierSolver {
public:
    BarrierSolver(const ConvexSubproblem& sp, const SolverOptions& opts) : sp_(sp), opts_(opts) {
        const GridDims& d = sp.dims();
        std::vector<std::ptrdiff_t> user_slot(d.users, -1);
        for (std::size_t k = 0; k < d.users; ++k)
            if (sp.payload_bits[k] > 0.0) {
                user_slot[k] = static_cast<std::ptrdiff_t>(users_.size());
                double root = std::sqrt(sp.taylor_anchor[k]);
                users_.push_back({k, {}, sp.payload_bits[k], sp.q_factor[k] / (2.0 * root),
                                  sp.q_factor[k] * sp.taylor_anchor[k] / (2.0 * root)});
            }
        power_scale_ = sp.p_max;

        for (std::size_t m = 0; m < d.freq_bins; ++m)
            for (std::size_t n = 0; n < d.slots; ++n) {
                Block b{entries_.size(), 0};
                for (std::size_t k = 0; k < d.users; ++k) {
                    std::size_t off = sp.gains.offset(m, n, k);
                    if (user_slot[k] < 0 || !sp.eligible[off]) continue;
                    auto u = static_cast<std::size_t>(user_slot[k]);
                    users_[u].entries.push_back(entries_.size());
                    entries_.push_back({off, u, sp.gains[off] * power_scale_, sp.weights[off]});
                    ++b.count;
                }
                if (b.count > 0) blocks_.push_back(b);
            }
        num_constraints_ = kEntryConstraints * entries_.size() + 2 * blocks_.size() + users_.size();
    }

    SubproblemSolution run(const SubproblemSolution* warm) {
        SubproblemSolution out;
        out.assign_frac = Tensor3<double>(sp_.dims(), 0.0);
        out.power = Tensor3<double>(sp_.dims(), 0.0);

        if (users_.empty()) {
            out.status = Status::Optimal;
            return out;
        }
        for (const auto& u : users_)
            if (u.entries.empty()) {
                out.status = Status::Infeasible;
                out.phase1_slack = std::numeric_limits<double>::infinity();
                return out;
            }

        std::optional<VectorXd> warm_z;
        if (warm) warm_z = from_warm_start(*warm);
        const bool near_path = warm_z.has_value();
        VectorXd z = near_path ? std::move(*warm_z) : analytic_start();

        // a usable warm start skips the early, loosely centered stages
        const double t0 = 1.0 / (near_path ? opts_.warm_mu_initial : opts_.mu_initial);

        if (!rates_positive(z)) {
            double s = 0.0;
            for (std::size_t u = 0; u < users_.size(); ++u) s = std::max(s, -rate_slack(z, u));
            s += 1.0;
            Phase1Result p1 = phase1(z, s, t0);
            out.newton_steps = newton_steps_;
            out.centering_steps = centering_steps_;
            if (!p1.found) {
                out.phase1_slack = p1.slack;
                // a slack optimum within phase1_tol of zero is not a certificate,
                // but there is no interior point to continue from either
                out.status = (p1.exhausted || p1.slack <= opts_.phase1_tol) ? Status::MaxIter : Status::Infeasible;
                return out;
            }
        }

        // Follow the central path. Once the slacks run out of floating-point
        // resolution a centering may stall; the path is then retried from the
        // last centered point with a smaller reduction of mu, and abandoned
        // when that reduction becomes negligible.
        double t = t0;
        double factor = opts_.mu_factor;
        double no_slack = 0.0;
        VectorXd best;
        double best_t = 0.0, best_decrement = 0.0;
        while (true) {
            VectorXd start = z;
            Centering c = center(z, no_slack, t, false, nullptr);
            emit_trace("phase2", z, 0.0, t);
            if (c == Centering::Centered) {
                best = z;
                best_t = t;
                best_decrement = last_decrement_;
                if (1.0 / t <= opts_.gap_target) break;
                t *= factor;
                continue;
            }
            if (best.size() == 0) {
                best = std::move(start);
                best_t = t;
                best_decrement = std::numeric_limits<double>::infinity();
                break;
            }
            factor = std::sqrt(factor);
            if (c == Centering::Budget || factor < 1.2) break;
            z = best;
            t = best_t * factor;
        }
        z = std::move(best);

        double obj = 0.0;
        for (std::size_t e = 0; e < entries_.size(); ++e) {
            out.assign_frac[entries_[e].offset] = z[3 * e];
            out.power[entries_[e].offset] = z[3 * e + 1] * power_scale_;
            obj += z[3 * e + 1];
        }
        out.objective = obj * power_scale_;
        // Stationarity is the Newton decrement (the gradient in the Hessian's
        // local norm) over t; every multiplier-slack product equals 1/t.
        out.complementarity = 1.0 / best_t;
        out.kkt_residual = std::max(std::sqrt(std::abs(best_decrement)) / best_t, out.complementarity);
        out.newton_steps = newton_steps_;
        out.centering_steps = centering_steps_;
        out.status = out.kkt_residual <= opts_.kkt_tol ? Status::Optimal : Status::MaxIter;
        return out;
    }

private:
    // I, 1 - I, p, I - p, I + c p, I ln(1 + c p / I) - tau
    static constexpr std::size_t kEntryConstraints = 6;
    static constexpr Eigen::Index kEntryRows = 7;  // plus one curvature row

    struct Phase1Result {
        bool found = false;
        bool exhausted = false;
        double slack = 0.0;
    };

    enum class Centering { Centered, Budget, Stalled };

    std::size_t nx() const { return 3 * entries_.size(); }

    static double entry_rate(double I, double p, double gain) { return I * std::log1p(gain * p / I); }

    // tau placed strictly below the entry rate
    static double tau_below(double I, double p, double gain, double fraction) {
        double h = entry_rate(I, p, gain);
        return h - (fraction * h + 1e-6 * I);
    }

    // I = 0.5 / max(#entries, sum of weights) on every PRB, p at half its cap.
    VectorXd analytic_start() const {
        VectorXd z(static_cast<Eigen::Index>(nx()));
        for (const auto& b : blocks_) {
            double wsum = 0.0;
            for (std::size_t e = b.first; e < b.first + b.count; ++e) wsum += entries_[e].weight;
            double level = 0.5 / std::max(static_cast<double>(b.count), wsum);
            for (std::size_t e = b.first; e < b.first + b.count; ++e) {
                z[3 * e] = level;
                z[3 * e + 1] = 0.5 * level;
                z[3 * e + 2] = tau_below(level, 0.5 * level, entries_[e].gain, 0.5);
            }
        }
        return z;
    }

    // Previous solution pulled 1% toward the analytic start, then shrunk per
    // PRB until every linear constraint holds strictly. Empty if that fails.
    std::optional<VectorXd> from_warm_start(const SubproblemSolution& warm) const {
        if (warm.assign_frac.dims() != sp_.dims() || warm.power.dims() != sp_.dims()) return std::nullopt;
        VectorXd center = analytic_start();
        VectorXd z(static_cast<Eigen::Index>(nx()));
        for (std::size_t e = 0; e < entries_.size(); ++e) {
            double I = warm.assign_frac[entries_[e].offset];
            double p = warm.power[entries_[e].offset] / power_scale_;
            if (!std::isfinite(I) || !std::isfinite(p)) return std::nullopt;
            I = std::clamp(I, 0.0, 1.0);
            p = std::clamp(p, 0.0, I);
            z[3 * e] = 0.99 * I + 0.01 * center[3 * e];
            z[3 * e + 1] = 0.99 * p + 0.01 * center[3 * e + 1];
        }
        for (const auto& b : blocks_) {
            double sum = 0.0, wsum = 0.0;
            for (std::size_t e = b.first; e < b.first + b.count; ++e) {
                sum += z[3 * e];
                wsum += entries_[e].weight * z[3 * e];
            }
            double worst = std::max(sum, wsum);
            if (worst > 0.99) {
                double shrink = 0.99 / worst;
                for (std::size_t e = b.first; e < b.first + b.count; ++e) {
                    z[3 * e] *= shrink;
                    z[3 * e + 1] *= shrink;
                }
            }
        }
        for (std::size_t e = 0; e < entries_.size(); ++e) {
            double& I = z[3 * e];
            double& p = z[3 * e + 1];
            I = std::clamp(I, 1e-9, 0.99);
            p = std::clamp(p, 1e-6 * I, 0.99 * I);
            z[3 * e + 2] = tau_below(I, p, entries_[e].gain, 0.01);
        }
        std::vector<double> r;
        if (!slacks(z, std::numeric_limits<double>::infinity(), r)) return std::nullopt;
        return z;
    }

    double rate_slack(const VectorXd& z, std::size_t u) const {
        const User& usr = users_[u];
        double nats = 0.0, x = 0.0;
        for (std::size_t e : usr.entries) {
            nats += z[3 * e + 2];
            x += z[3 * e];
        }
        return nats / kLn2 - usr.q_slope * x - usr.q_const - usr.payload;
    }

    bool rates_positive(const VectorXd& z) const {
        for (std::size_t u = 0; u < users_.size(); ++u)
            if (!(rate_slack(z, u) > 0.0)) return false;
        return true;
    }

    // Collects every barrier slack; false if any is nonpositive.
    bool slacks(const VectorXd& z, double s, std::vector<double>& out) const {
        out.clear();
        out.reserve(num_constraints_);
        for (std::size_t e = 0; e < entries_.size(); ++e) {
            const double I = z[3 * e], p = z[3 * e + 1], tau = z[3 * e + 2], c = entries_[e].gain;
            out.push_back(I);
            out.push_back(1.0 - I);
            out.push_back(p);
            out.push_back(I - p);
            out.push_back(I + c * p);
            out.push_back(I > 0.0 && p >= 0.0 ? entry_rate(I, p, c) - tau : -1.0);
        }
        for (const auto& b : blocks_) {
            double sum = 0.0, wsum = 0.0;
            for (std::size_t e = b.first; e < b.first + b.count; ++e) {
                sum += z[3 * e];
                wsum += entries_[e].weight * z[3 * e];
            }
            out.push_back(1.0 - sum);
            out.push_back(1.0 - wsum);
        }
        for (std::size_t u = 0; u < users_.size(); ++u) out.push_back(rate_slack(z, u) + s);
        for (double r : out)
            if (!(r > 0.0)) return false;
        return true;
    }

    // Change of every slack in slacks() order along alpha * (dz, ds), computed
    // from the step itself so that it stays accurate when the slacks are tiny.
    void slack_changes(const VectorXd& z, const VectorXd& dz, double ds, double alpha,
                       std::vector<double>& out) const {
        out.clear();
        out.reserve(num_constraints_);
        for (std::size_t e = 0; e < entries_.size(); ++e) {
            const double I = z[3 * e], p = z[3 * e + 1], c = entries_[e].gain;
            const double dI = alpha * dz[3 * e], dp = alpha * dz[3 * e + 1], dtau = alpha * dz[3 * e + 2];
            const double I2 = I + dI, u = c * p / I, u2 = c * (p + dp) / I2;
            out.push_back(dI);
            out.push_back(-dI);
            out.push_back(dp);
            out.push_back(dI - dp);
            out.push_back(dI + c * dp);
            // I2 ln(1 + u2) - I ln(1 + u) = dI ln(1 + u2) + I ln((1 + u2) / (1 + u))
            const double du = c * (dp * I - p * dI) / (I * I2);
            out.push_back(dI * std::log1p(u2) + I * std::log1p(du / (1.0 + u)) - dtau);
        }
        for (const auto& b : blocks_) {
            double dsum = 0.0, dwsum = 0.0;
            for (std::size_t e = b.first; e < b.first + b.count; ++e) {
                dsum += dz[3 * e];
                dwsum += entries_[e].weight * dz[3 * e];
            }
            out.push_back(-alpha * dsum);
            out.push_back(-alpha * dwsum);
        }
        for (const auto& usr : users_) {
            double d = ds;
            for (std::size_t e : usr.entries) d += dz[3 * e + 2] / kLn2 - usr.q_slope * dz[3 * e];
            out.push_back(alpha * d);
        }
    }

    // Derivative of the barrier function along (dz, ds), from the slack
    // changes per unit step.
    double directional_derivative(const VectorXd& z, const VectorXd& dz, double ds, double t, bool phase1,
                                  const std::vector<double>& r) const {
        double d = t * (phase1 ? ds : directional_objective(dz));
        std::size_t i = 0;
        for (std::size_t e = 0; e < entries_.size(); ++e, i += kEntryConstraints) {
            const double I = z[3 * e], p = z[3 * e + 1], c = entries_[e].gain;
            const double dI = dz[3 * e], dp = dz[3 * e + 1], dtau = dz[3 * e + 2];
            const double u = c * p / I, den = 1.0 + u;
            d -= dI / r[i] - dI / r[i + 1] + dp / r[i + 2] + (dI - dp) / r[i + 3] + (dI + c * dp) / r[i + 4];
            d -= ((std::log1p(u) - u / den) * dI + c / den * dp - dtau) / r[i + 5];
        }
        for (const auto& b : blocks_) {
            double dsum = 0.0, dwsum = 0.0;
            for (std::size_t e = b.first; e < b.first + b.count; ++e) {
                dsum += dz[3 * e];
                dwsum += entries_[e].weight * dz[3 * e];
            }
            d += dsum / r[i++];
            d += dwsum / r[i++];
        }
        for (const auto& usr : users_) {
            double dr = ds;
            for (std::size_t e : usr.entries) dr += dz[3 * e + 2] / kLn2 - usr.q_slope * dz[3 * e];
            d -= dr / r[i++];
        }
        return d;
    }

    double objective(const VectorXd& z) const {
        double obj = 0.0;
        for (std::size_t e = 0; e < entries_.size(); ++e) obj += z[3 * e + 1];
        return obj;
    }

    double directional_objective(const VectorXd& dz) const { return objective(dz); }

    // The Hessian of each PRB's barrier terms is M^T M with one row per term:
    // grad r / r for a constraint r, and the square root of the curvature of
    // the entry rate. Only its triangular QR factor is kept; forming M^T M
    // would drown the small diagonal once a constraint is nearly tight.
    struct PrbFactor {
        MatrixXd R;    // upper triangular, B_b = R^T R
        VectorXd qtb;  // Q^T b, with b = -1 on constraint rows and 0 on curvature rows
    };
    struct Newton {
        std::vector<PrbFactor> prb;
        MatrixXd A;           // nx x users: rate-constraint gradients
        MatrixXd Y;           // R^-T A
        VectorXd rate_slack;  // r_k (plus s in phase 1)
        Eigen::LLT<MatrixXd> cap;  // diag(r^2) + Y^T Y
    };

    bool assemble(const VectorXd& z, double s, Newton& nw) const {
        const std::size_t nu = users_.size();
        nw.rate_slack.resize(static_cast<Eigen::Index>(nu));
        for (std::size_t u = 0; u < nu; ++u) nw.rate_slack[u] = rate_slack(z, u) + s;
        nw.A = MatrixXd::Zero(static_cast<Eigen::Index>(nx()), static_cast<Eigen::Index>(nu));
        nw.Y.resize(nw.A.rows(), nw.A.cols());
        nw.prb.resize(blocks_.size());

        Eigen::Matrix<double, kEntryRows, 3> E;
        Eigen::Matrix<double, kEntryRows, 1> eb;
        Eigen::Matrix<double, 2, Eigen::Dynamic> extra;
        for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
            const Block& blk = blocks_[bi];
            const auto n = static_cast<Eigen::Index>(3 * blk.count);
            double sum = 0.0, wsum = 0.0;
            for (std::size_t e = blk.first; e < blk.first + blk.count; ++e) {
                sum += z[3 * e];
                wsum += entries_[e].weight * z[3 * e];
            }
            const double r1 = 1.0 - sum, r2 = 1.0 - wsum;
            PrbFactor& f = nw.prb[bi];
            f.R = MatrixXd::Zero(n, n);
            f.qtb.resize(n);
            extra = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, n);

            // each entry's rows are first compressed to a 3x3 triangle
            for (std::size_t e = blk.first; e < blk.first + blk.count; ++e) {
                const Entry& en = entries_[e];
                const double I = z[3 * e], p = z[3 * e + 1], tau = z[3 * e + 2], c = en.gain;
                const double u = c * p / I, den = 1.0 + u;
                const double psi = entry_rate(I, p, c) - tau;
                const double cap = I - p, zeta = I + c * p;
                if (!(psi > 0.0)) return false;
                nw.A(3 * e, en.user) = -users_[en.user].q_slope;
                nw.A(3 * e + 2, en.user) = 1.0 / kLn2;

                E.setZero();
                E(0, 0) = 1.0 / I;
                E(1, 0) = -1.0 / (1.0 - I);
                E(2, 1) = 1.0 / p;
                E(3, 0) = 1.0 / cap;
                E(3, 1) = -1.0 / cap;
                E(4, 0) = 1.0 / zeta;
                E(4, 1) = c / zeta;
                E(5, 0) = (std::log1p(u) - u / den) / psi;
                E(5, 1) = c / (den * psi);
                E(5, 2) = -1.0 / psi;
                const double root = 1.0 / (den * std::sqrt(psi * I));
                E(6, 0) = root * u;
                E(6, 1) = -root * c;
                eb.setConstant(-1.0);
                eb[6] = 0.0;

                Eigen::HouseholderQR<Eigen::Matrix<double, kEntryRows, 3>> qr(E);
                const auto li = static_cast<Eigen::Index>(3 * (e - blk.first));
                f.R.block<3, 3>(li, li) = qr.matrixQR().topRows<3>().triangularView<Eigen::Upper>();
                eb.applyOnTheLeft(qr.householderQ().adjoint());
                f.qtb.segment<3>(li) = eb.head<3>();
                extra(0, li) = -1.0 / r1;
                extra(1, li) = -en.weight / r2;
            }
            // fold the two block rows (right-hand side -1) into the triangle
            for (int row = 0; row < 2; ++row) {
                double rhs = -1.0;
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (extra(row, j) == 0.0) continue;
                    const double h = std::hypot(f.R(j, j), extra(row, j));
                    const double c = f.R(j, j) / h, sn = extra(row, j) / h;
                    for (Eigen::Index k = j; k < n; ++k) {
                        const double a = f.R(j, k), b = extra(row, k);
                        f.R(j, k) = c * a + sn * b;
                        extra(row, k) = c * b - sn * a;
                    }
                    const double a = f.qtb[j];
                    f.qtb[j] = c * a + sn * rhs;
                    rhs = c * rhs - sn * a;
                }
            }
            for (Eigen::Index i = 0; i < n; ++i)
                if (!(std::abs(f.R(i, i)) > 0.0) || !std::isfinite(f.R(i, i))) return false;

            const auto start = static_cast<Eigen::Index>(3 * blk.first);
            nw.Y.middleRows(start, n) = f.R.transpose().triangularView<Eigen::Lower>().solve(nw.A.middleRows(start, n));
        }

        MatrixXd C = nw.Y.transpose() * nw.Y;
        for (std::size_t u = 0; u < nu; ++u) C(u, u) += nw.rate_slack[u] * nw.rate_slack[u];
        nw.cap.compute(C);
        return nw.cap.info() == Eigen::Success;
    }

    // Newton step for B + A diag(1/r^2) A^T, bordered by s in phase 1. The
    // rate-barrier gradient lies in range(A) and enters through the exact
    // identity H^-1 A = B^-1 A C^-1 diag(r^2), so nothing large cancels when
    // some r is tiny. The decrement is returned as a sum of squares.
    double newton_step(const Newton& nw, double t, bool phase1, VectorXd& dz, double& ds) const {
        const VectorXd& r = nw.rate_slack;
        // beta = R^-T (gradient without the rate terms); B^-1 of it is R^-1 beta
        VectorXd beta(static_cast<Eigen::Index>(nx()));
        for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
            const auto start = static_cast<Eigen::Index>(3 * blocks_[bi].first);
            const auto len = static_cast<Eigen::Index>(3 * blocks_[bi].count);
            const PrbFactor& f = nw.prb[bi];
            VectorXd seg = f.qtb;
            if (!phase1) {
                VectorXd c = VectorXd::Zero(len);
                for (Eigen::Index i = 1; i < len; i += 3) c[i] = t;
                seg += f.R.transpose().triangularView<Eigen::Lower>().solve(c);
            }
            beta.segment(start, len) = seg;
        }
        VectorXd w = nw.Y.transpose() * beta + r;
        ds = 0.0;
        if (phase1) {
            VectorXd ones = VectorXd::Ones(r.size());
            VectorXd c1 = nw.cap.solve(ones);
            ds = (-t + c1.dot(w)) / ones.dot(c1);
            w -= ds * ones;
        }
        VectorXd cw = nw.cap.solve(w);
        VectorXd v = nw.Y * cw - beta;  // R dz

        double dec = v.squaredNorm();
        // (a^T dz + ds) / r = 1 - r (C^-1 w)
        for (Eigen::Index u = 0; u < r.size(); ++u) {
            const double e = 1.0 - r[u] * cw[u];
            dec += e * e;
        }
        dz.resize(v.size());
        for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
            const auto start = static_cast<Eigen::Index>(3 * blocks_[bi].first);
            const auto len = static_cast<Eigen::Index>(3 * blocks_[bi].count);
            dz.segment(start, len) = nw.prb[bi].R.triangularView<Eigen::Upper>().solve(v.segment(start, len));
        }
        return dec;
    }

    // Largest step keeping every linear constraint positive.
    double max_step(const VectorXd& z, double s, const VectorXd& dz, double ds) const {
        double alpha = std::numeric_limits<double>::infinity();
        auto limit = [&](double slack, double rate) {
            if (rate < 0.0) alpha = std::min(alpha, slack / -rate);
        };
        for (std::size_t e = 0; e < entries_.size(); ++e) {
            const double I = z[3 * e], p = z[3 * e + 1], dI = dz[3 * e], dp = dz[3 * e + 1];
            const double c = entries_[e].gain;
            limit(I, dI);
            limit(1.0 - I, -dI);
            limit(p, dp);
            limit(I - p, dI - dp);
            limit(I + c * p, dI + c * dp);
        }
        for (const auto& b : blocks_) {
            double sum = 0.0, wsum = 0.0, dsum = 0.0, dwsum = 0.0;
            for (std::size_t e = b.first; e < b.first + b.count; ++e) {
                sum += z[3 * e];
                wsum += entries_[e].weight * z[3 * e];
                dsum += dz[3 * e];
                dwsum += entries_[e].weight * dz[3 * e];
            }
            limit(1.0 - sum, -dsum);
            limit(1.0 - wsum, -dwsum);
        }
        for (std::size_t u = 0; u < users_.size(); ++u) {
            double rate = ds;
            for (std::size_t e : users_[u].entries) rate += dz[3 * e + 2] / kLn2 - users_[u].q_slope * dz[3 * e];
            limit(rate_slack(z, u) + s, rate);
        }
        return alpha;
    }

    // Damped Newton at parameter t. In phase 1 with `feasible_found`, returns
    // early once s < 0.
    Centering center(VectorXd& z, double& s, double t, bool phase1, bool* feasible_found) {
        ++centering_steps_;
        std::vector<double> r_old, r_new, r_step;
        for (int it = 0; it < opts_.max_newton_per_center; ++it) {
            if (newton_steps_ >= opts_.max_newton_total) return Centering::Budget;
            ++newton_steps_;

            Newton nw;
            if (!assemble(z, s, nw)) return Centering::Stalled;
            VectorXd dz;
            double ds = 0.0;
            newton_step(nw, t, phase1, dz, ds);
            slacks(z, s, r_old);
            // In exact arithmetic this is the Newton decrement. Measuring it
            // along the computed direction stays reliable when the Newton
            // system is solved only roughly.
            const double decrement = -directional_derivative(z, dz, ds, t, phase1, r_old);
            last_decrement_ = decrement;
            if (!std::isfinite(decrement)) return Centering::Stalled;
            const Centering stuck = std::abs(decrement) <= kNoiseDecrement ? Centering::Centered : Centering::Stalled;
            if (decrement >= 0.0 && decrement / 2.0 <= opts_.newton_tol) return Centering::Centered;
            if (decrement < 0.0) return stuck;

            double alpha = std::min(1.0, 0.99 * max_step(z, s, dz, ds));
            const double obj_rate = phase1 ? ds : directional_objective(dz);
            bool accepted = false;
            while (alpha > 1e-14) {
                slack_changes(z, dz, ds, alpha, r_step);
                double dF = t * alpha * obj_rate;
                bool inside = true;
                for (std::size_t i = 0; i < r_step.size() && inside; ++i) {
                    const double ratio = r_step[i] / r_old[i];
                    inside = ratio > -1.0;
                    if (inside) dF -= std::log1p(ratio);
                }
                VectorXd trial = z + alpha * dz;
                const double s_trial = s + alpha * ds;
                // the direct slack evaluation has the final say on feasibility
                if (inside && dF <= -0.25 * alpha * decrement && slacks(trial, s_trial, r_new)) {
                    z = std::move(trial);
                    s = s_trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) return stuck;
            if (phase1 && feasible_found && s < 0.0) {
                *feasible_found = true;
                return Centering::Centered;
            }
        }
        return Centering::Budget;
    }

    // Minimizes the auxiliary slack s. A centered point at parameter t bounds
    // the optimum below by s - m / t, which certifies infeasibility once it
    // clears phase1_tol.
    Phase1Result phase1(VectorXd& z, double s, double t) {
        Phase1Result res;
        const double m = static_cast<double>(num_constraints_);
        double bound = -std::numeric_limits<double>::infinity();
        while (true) {
            bool found = false;
            const bool centered = center(z, s, t, true, &found) == Centering::Centered;
            emit_trace("phase1", z, s, t);
            if (found || s < 0.0) {
                res.found = rates_positive(z);
                if (res.found) return res;
            }
            if (centered) bound = s - m / t;
            if (bound > opts_.phase1_tol) {
                res.slack = bound;
                return res;
            }
            if (!centered) {
                res.exhausted = true;
                res.slack = s;
                return res;
            }
            if (1.0 / t <= opts_.gap_target) break;
            t *= opts_.mu_factor;
        }
        res.slack = s;
        return res;
    }

    void emit_trace(const char* phase, const VectorXd& z, double s, double t) const {
        if (!opts_.trace) return;
        double obj = std::string_view(phase) == "phase1" ? s : objective(z) * power_scale_;
        *opts_.trace << phase << ',' << format_double(1.0 / t) << ',' << newton_steps_ << ','
                     << format_double(last_decrement_) << ',' << format_double(obj) << ','
                     << format_double(static_cast<double>(num_constraints_) / t) << '\n';
    }

    const ConvexSubproblem& sp_;
    const SolverOptions& opts_;
    std::vector<Entry> entries_;
    std::vector<Block> blocks_;
    std::vector<User> users_;
    double power_scale_ = 1.0;  // watts per unit of z's powers
    std::size_t num_constraints_ = 0;
    int newton_steps_ = 0;
    int centering_steps_ = 0;
    double last_decrement_ = 0.0;
};

}  // namespace

SubproblemSolution solve(const ConvexSubproblem& sp, const SubproblemSolution* warm_start, const SolverOptions& opts) {
    validate(sp);
    SubproblemSolution out = BarrierSolver(sp, opts).run(warm_start);
    if (!warm_start || out.status == Status::Optimal) return out;
    // a warm point far from the central path can exhaust the budget; start over
    SubproblemSolution cold = BarrierSolver(sp, opts).run(nullptr);
    cold.newton_steps += out.newton_steps;
    cold.centering_steps += out.centering_steps;
    return cold;
}

}  // namespace urllc::subproblem

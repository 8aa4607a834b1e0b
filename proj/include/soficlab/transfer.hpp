#pragma once

// One-dimensional transfer matrices: T(a,b) = 1[(a,b) in R] exp(h(b) + J(a,b)).
// Perron data, the stationary Markov chain of the infinite-volume Gibbs
// measure, traces of powers and conditional laws given pinned sites.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "soficlab/error.hpp"
#include "soficlab/model.hpp"

namespace soficlab {

class TransferMatrix {
public:
    explicit TransferMatrix(const Model& model) : a_(model.alphabet()) {
        require(model.num_generators() == 1, ErrorCode::wrong_builder, "transfer matrices need a rank-1 group");
        T_ = constrained(model, true);
        free_ = constrained(model, false);
        perron();
    }

    [[nodiscard]] int alphabet() const noexcept { return a_; }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return T_; }
    /// Same weights without the constraint (for edges that are not enforced).
    [[nodiscard]] const Eigen::MatrixXd& unconstrained() const noexcept { return free_; }
    [[nodiscard]] double log_rho() const noexcept { return log_rho_; }
    [[nodiscard]] double pressure() const noexcept { return log_rho_; }
    /// Markov kernel P(a,b) = T(a,b) r(b) / (rho r(a)).
    [[nodiscard]] const Eigen::MatrixXd& kernel() const noexcept { return P_; }
    [[nodiscard]] const Eigen::VectorXd& stationary() const noexcept { return pi_; }

    /// P^k, cached.
    [[nodiscard]] const Eigen::MatrixXd& kernel_power(int k) const {
        while (static_cast<int>(powers_.size()) <= k) {
            if (powers_.empty()) powers_.push_back(Eigen::MatrixXd::Identity(a_, a_));
            else powers_.push_back(powers_.back() * P_);
        }
        return powers_[static_cast<size_t>(k)];
    }

    /// -sum_a pi(a) sum_b P(a,b) log P(a,b)
    [[nodiscard]] double entropy_rate() const {
        double h = 0.0;
        for (int i = 0; i < a_; ++i)
            for (int j = 0; j < a_; ++j)
                if (P_(i, j) > 0.0) h -= pi_(i) * P_(i, j) * std::log(P_(i, j));
        return h;
    }

    /// Law of x_0 given x_{-left_dist} = left and x_{right_dist} = right;
    /// a distance of 0 means that side is unpinned.
    [[nodiscard]] std::vector<double> conditional(int left_dist, int left, int right_dist, int right) const {
        std::vector<double> w(static_cast<size_t>(a_));
        double total = 0.0;
        for (int c = 0; c < a_; ++c) {
            double x = left_dist > 0 ? kernel_power(left_dist)(left, c) : pi_(c);
            if (right_dist > 0) x *= kernel_power(right_dist)(c, right);
            w[static_cast<size_t>(c)] = x;
            total += x;
        }
        require(total > 0.0, ErrorCode::oracle, "conditioning event has probability zero");
        for (double& x : w) x /= total;
        return w;
    }

    /// Stationary law of a window x_{-r..r}, as a vector indexed by position + r.
    [[nodiscard]] double window_probability(const std::vector<int>& path) const {
        if (path.empty()) return 1.0;
        double p = pi_(path[0]);
        for (size_t i = 1; i < path.size(); ++i) p *= P_(path[i - 1], path[i]);
        return p;
    }

    /// Exact sample of x_{-r..r} from the infinite-volume measure.
    template <class Rng>
    [[nodiscard]] std::vector<int> sample_window(int r, Rng& rng) const {
        std::vector<int> path(static_cast<size_t>(2 * r + 1));
        std::uniform_real_distribution<double> U(0.0, 1.0);
        auto draw = [&](auto row) {
            double u = U(rng), acc = 0.0;
            for (int c = 0; c < a_; ++c) {
                acc += row(c);
                if (u < acc) return c;
            }
            return a_ - 1;
        };
        path[0] = draw([&](int c) { return pi_(c); });
        for (size_t i = 1; i < path.size(); ++i) {
            int prev = path[i - 1];
            path[i] = draw([&](int c) { return P_(prev, c); });
        }
        return path;
    }

    /// log trace(M_0 M_1 ... M_{m-1}) where M_i is T or the unconstrained matrix.
    [[nodiscard]] double log_trace_product(const std::vector<char>& enforced) const {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(a_, a_);
        double log_scale = 0.0;
        for (char e : enforced) {
            acc = acc * (e ? T_ : free_);
            double mx = acc.cwiseAbs().maxCoeff();
            if (mx <= 0.0) return -std::numeric_limits<double>::infinity();
            acc /= mx;
            log_scale += std::log(mx);
        }
        double tr = acc.trace();
        if (tr <= 0.0) return -std::numeric_limits<double>::infinity();
        return log_scale + std::log(tr);
    }

    [[nodiscard]] double log_trace_power(int m) const { return log_trace_product(std::vector<char>(static_cast<size_t>(m), 1)); }

private:
    Eigen::MatrixXd constrained(const Model& model, bool enforce) const {
        Eigen::MatrixXd T(a_, a_);
        for (int i = 0; i < a_; ++i)
            for (int j = 0; j < a_; ++j)
                T(i, j) = (enforce && !model.allowed(0, i, j)) ? 0.0 : std::exp(model.h(j) + model.J(0, i, j));
        return T;
    }

    void perron() {
        Eigen::EigenSolver<Eigen::MatrixXd> right(T_);
        Eigen::EigenSolver<Eigen::MatrixXd> left(T_.transpose());
        auto top = [](const Eigen::EigenSolver<Eigen::MatrixXd>& es) {
            int best = 0;
            for (int i = 1; i < es.eigenvalues().size(); ++i)
                if (es.eigenvalues()(i).real() > es.eigenvalues()(best).real()) best = i;
            return best;
        };
        int ir = top(right), il = top(left);
        double rho = right.eigenvalues()(ir).real();
        require(rho > 0.0, ErrorCode::oracle, "transfer matrix has no positive Perron root");
        log_rho_ = std::log(rho);
        Eigen::VectorXd r = right.eigenvectors().col(ir).real().cwiseAbs();
        Eigen::VectorXd l = left.eigenvectors().col(il).real().cwiseAbs();
        P_ = Eigen::MatrixXd::Zero(a_, a_);
        for (int i = 0; i < a_; ++i)
            for (int j = 0; j < a_; ++j)
                if (r(i) > 0.0) P_(i, j) = T_(i, j) * r(j) / (rho * r(i));
        pi_ = l.cwiseProduct(r);
        pi_ /= pi_.sum();
    }

    int a_;
    Eigen::MatrixXd T_, free_, P_;
    Eigen::VectorXd pi_;
    double log_rho_ = 0.0;
    mutable std::vector<Eigen::MatrixXd> powers_;
};

} // namespace soficlab

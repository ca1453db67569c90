#include "ranslice/dqn/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ranslice/errors.hpp"

namespace ranslice::dqn {

const double* TargetCache::find(std::span<const double> state) const {
    if (state.size() != dim_) return nullptr;
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (std::memcmp(keys_.data() + i * dim_, state.data(), dim_ * sizeof(double)) == 0) return &values_[i];
    return nullptr;
}

void TargetCache::insert(std::span<const double> state, double value) {
    if (values_.empty()) dim_ = state.size();
    if (state.size() != dim_) throw ShapeError("target cache keys differ in size");
    keys_.insert(keys_.end(), state.begin(), state.end());
    values_.push_back(value);
}

void TargetCache::clear() {
    keys_.clear();
    values_.clear();
    dim_ = 0;
}

namespace {

// Copies the distinct rows of `m` into `uniq` (first-seen order) and records
// which distinct row each input row maps to.
void distinct_rows(const Matrix& m, Matrix& uniq, std::vector<std::size_t>& row_of) {
    const std::size_t d = m.cols;
    uniq.resize(0, d);
    row_of.resize(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        std::size_t u = 0;
        for (; u < uniq.rows; ++u)
            if (std::memcmp(uniq.row(u), m.row(r), d * sizeof(double)) == 0) break;
        if (u == uniq.rows) {
            uniq.data.insert(uniq.data.end(), m.row(r), m.row(r) + d);
            ++uniq.rows;
        }
        row_of[r] = u;
    }
}

void identity_rows(const Matrix& m, Matrix& out, std::vector<std::size_t>& row_of) {
    out = m;
    row_of.resize(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) row_of[r] = r;
}

}  // namespace

double td_loss_and_grads(const Mlp& net, const Mlp& target, const Batch& batch, double gamma,
                         std::span<double> grads, TdWorkspace& ws, const TdOptions& opt) {
    const std::size_t n = batch.size();
    if (n == 0) throw ShapeError("empty batch");
    if (batch.states.rows != n || batch.next_states.rows != n || batch.rewards.size() != n || batch.done.size() != n)
        throw ShapeError("batch columns differ in length");
    const std::size_t A = net.output_dim();
    if (target.dims() != net.dims()) throw ShapeError("target network shape differs from the online network");

    auto group = opt.dedupe ? &distinct_rows : &identity_rows;
    group(batch.states, ws.unique_states, ws.row_of);
    group(batch.next_states, ws.unique_next, ws.next_row_of);

    // Bootstrap values for each distinct next state.
    const std::size_t un = ws.unique_next.rows;
    ws.next_max.assign(un, 0.0);
    if (gamma != 0.0) {
        Matrix missing(0, ws.unique_next.cols);
        std::vector<std::size_t> missing_idx;
        for (std::size_t u = 0; u < un; ++u) {
            const std::span<const double> s(ws.unique_next.row(u), ws.unique_next.cols);
            if (opt.target_cache) {
                if (const double* hit = opt.target_cache->find(s)) {
                    ws.next_max[u] = *hit;
                    continue;
                }
            }
            missing.data.insert(missing.data.end(), s.begin(), s.end());
            ++missing.rows;
            missing_idx.push_back(u);
        }
        if (missing.rows > 0) {
            const Matrix& q = target.forward(missing, ws.target, opt.backend);
            for (std::size_t j = 0; j < missing.rows; ++j) {
                const double mx = *std::max_element(q.row(j), q.row(j) + A);
                ws.next_max[missing_idx[j]] = mx;
                if (opt.target_cache)
                    opt.target_cache->insert({missing.row(j), missing.cols}, mx);
            }
        }
    }

    const Matrix& q = net.forward(ws.unique_states, ws.online, opt.backend);
    ws.d_out.resize(q.rows, A);
    std::fill(ws.d_out.data.begin(), ws.d_out.data.end(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = batch.actions[i];
        if (a >= A) throw ShapeError("action index outside the network output");
        const double y = batch.rewards[i] + (batch.done[i] ? 0.0 : gamma * ws.next_max[ws.next_row_of[i]]);
        const double diff = q(ws.row_of[i], a) - y;
        loss += diff * diff * inv_n;
        ws.d_out(ws.row_of[i], a) += 2.0 * diff * inv_n;
    }
    net.backward(ws.online, ws.d_out, grads, opt.backend);
    return loss;
}

TdResult td_loss_and_grads(const Mlp& net, const Mlp& target, const Batch& batch, double gamma,
                           const TdOptions& opt) {
    TdResult res;
    res.grads.assign(net.param_count(), 0.0);
    TdWorkspace ws;
    res.loss = td_loss_and_grads(net, target, batch, gamma, res.grads, ws, opt);
    return res;
}

std::size_t argmax(std::span<const double> q) {
    if (q.empty()) throw ShapeError("argmax of an empty vector");
    return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

std::size_t act_epsilon_greedy(std::span<const double> q, double eps, std::mt19937_64& rng) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw ValidationError("epsilon must lie in [0, 1]");
    if (q.empty()) throw ShapeError("no actions to choose from");
    // Always consume the same draws so the stream does not depend on eps.
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const std::size_t random_action = std::uniform_int_distribution<std::size_t>(0, q.size() - 1)(rng);
    return u < eps ? random_action : argmax(q);
}

double EpsilonSchedule::at(std::size_t episode, std::size_t episodes) const {
    const double horizon = std::max(1.0, std::round(anneal_fraction * static_cast<double>(episodes)));
    const double frac = std::min(1.0, static_cast<double>(episode) / horizon);
    return start + (end - start) * frac;
}

}  // namespace ranslice::dqn

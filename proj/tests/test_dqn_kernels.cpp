#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ranslice/dqn/kernels.hpp"

namespace k = ranslice::dqn::kernels;

namespace {

std::vector<double> randv(std::size_t n, std::mt19937_64& rng, double zero_frac = 0.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), z(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = z(rng) < zero_frac ? 0.0 : u(rng);
    return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::fabs(a[i] - b[i]) / std::max(1.0, std::fabs(b[i])));
    CHECK(worst <= tol);
}

struct Shape {
    std::size_t n, in, out;
};

// Small shapes stay serial, the large ones cross the OpenMP threshold.
const Shape kShapes[] = {{1, 1, 17}, {3, 5, 7}, {128, 1, 256}, {128, 256, 256}, {64, 256, 17}, {200, 70, 130}};

}  // namespace

TEST_CASE("dense_forward matches the reference") {
    std::mt19937_64 rng(1);
    for (const auto& s : kShapes) {
        for (bool relu : {false, true}) {
            const auto X = randv(s.n * s.in, rng, 0.3);
            const auto W = randv(s.in * s.out, rng);
            const auto b = randv(s.out, rng);
            std::vector<double> y(s.n * s.out), y_ref(s.n * s.out);
            k::dense_forward(X.data(), s.n, s.in, W.data(), b.data(), s.out, y.data(), relu);
            k::reference::dense_forward(X.data(), s.n, s.in, W.data(), b.data(), s.out, y_ref.data(), relu);
            check_close(y, y_ref, 1e-12);
            if (relu)
                for (double v : y) CHECK(v >= 0.0);
        }
    }
}

TEST_CASE("dense_backward matches the reference and overwrites its outputs") {
    std::mt19937_64 rng(2);
    for (const auto& s : kShapes) {
        const auto X = randv(s.n * s.in, rng, 0.3);
        const auto dY = randv(s.n * s.out, rng, 0.5);
        const auto W = randv(s.in * s.out, rng);
        std::vector<double> dW(s.in * s.out, 7.0), db(s.out, 7.0), dX(s.n * s.in, 7.0);
        std::vector<double> dW_r(s.in * s.out), db_r(s.out), dX_r(s.n * s.in);
        k::dense_backward(X.data(), dY.data(), s.n, s.in, s.out, W.data(), dW.data(), db.data(), dX.data());
        k::reference::dense_backward(X.data(), dY.data(), s.n, s.in, s.out, W.data(), dW_r.data(), db_r.data(),
                                     dX_r.data());
        check_close(dW, dW_r, 1e-12);
        check_close(db, db_r, 1e-12);
        check_close(dX, dX_r, 1e-12);
        k::dense_backward(X.data(), dY.data(), s.n, s.in, s.out, W.data(), dW.data(), db.data(), nullptr);
        check_close(dW, dW_r, 1e-12);
    }
}

TEST_CASE("dense_backward against hand-computed values") {
    // X = [[1, 2]], W = [[1, 0, -1], [2, 1, 0]], dY = [[1, -1, 2]]
    const double X[] = {1, 2}, W[] = {1, 0, -1, 2, 1, 0}, dY[] = {1, -1, 2};
    double dW[6], db[3], dX[2];
    k::dense_backward(X, dY, 1, 2, 3, W, dW, db, dX);
    CHECK(std::vector<double>(dW, dW + 6) == std::vector<double>{1, -1, 2, 2, -2, 4});
    CHECK(std::vector<double>(db, db + 3) == std::vector<double>{1, -1, 2});
    CHECK(std::vector<double>(dX, dX + 2) == std::vector<double>{-1, 1});
    double Y[3];
    const double b[] = {0.5, 0, 0};
    k::dense_forward(X, 1, 2, W, b, 3, Y, true);
    CHECK(std::vector<double>(Y, Y + 3) == std::vector<double>{5.5, 2, 0});
}

TEST_CASE("relu_backward masks non-positive activations") {
    std::mt19937_64 rng(3);
    const auto Y = randv(5000, rng, 0.2);
    auto d = randv(5000, rng);
    auto d_ref = d;
    k::relu_backward(Y.data(), d.data(), d.size());
    k::reference::relu_backward(Y.data(), d_ref.data(), d_ref.size());
    CHECK(d == d_ref);
    for (std::size_t i = 0; i < Y.size(); ++i)
        if (Y[i] <= 0.0) CHECK(d[i] == 0.0);
}

TEST_CASE("adam_update matches the reference over many steps") {
    std::mt19937_64 rng(4);
    const std::size_t n = 70'000;
    auto p = randv(n, rng), p_ref = p;
    std::vector<double> m(n), v(n), m_ref(n), v_ref(n);
    for (long t = 1; t <= 20; ++t) {
        auto g = randv(n, rng, 0.1);
        k::adam_update(p.data(), g.data(), m.data(), v.data(), n, 1e-3, 0.9, 0.999, 1e-8, t);
        k::reference::adam_update(p_ref.data(), g.data(), m_ref.data(), v_ref.data(), n, 1e-3, 0.9, 0.999, 1e-8, t);
    }
    check_close(p, p_ref, 1e-14);
    check_close(m, m_ref, 1e-14);
    check_close(v, v_ref, 1e-14);
}

TEST_CASE("adam_update flushes subnormal moments") {
    double p = 1.0, g = 0.0, m = 1e-310, v = 1e-310;
    k::adam_update(&p, &g, &m, &v, 1, 1e-3, 0.9, 0.999, 1e-8, 5);
    CHECK(m == 0.0);
    CHECK(v == 0.0);
}

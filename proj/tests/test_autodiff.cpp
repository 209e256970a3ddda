#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "rlaif/autodiff/gradient_check.hpp"
#include "rlaif/autodiff/graph.hpp"
#include "rlaif/common/rng.hpp"

using namespace rlaif;
using ad::Tensor;

TEST_CASE("forward values of the primitive ops") {
    const Tensor x = Tensor::from_values(1, 1, {0.0});
    CHECK(ad::sigmoid(x).value() == doctest::Approx(0.5));

    const Tensor logits = Tensor::from_values(1, 4, {0.3, 0.3, 0.3, 0.3});
    const Tensor ls = ad::log_softmax(logits);
    for (double v : ls.values()) CHECK(v == doctest::Approx(-std::log(4.0)).epsilon(1e-12));

    const Tensor sm = ad::row_softmax(logits);
    for (double v : sm.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

    const Tensor a = Tensor::from_values(2, 2, {1, 2, 3, 4});
    const Tensor b = Tensor::from_values(2, 2, {5, 6, 7, 8});
    CHECK(ad::matmul(a, b).values() == std::vector<double>{19, 22, 43, 50});
    CHECK(ad::mul(a, b).values() == std::vector<double>{5, 12, 21, 32});
    CHECK(ad::sum(a).value() == 10.0);
}

TEST_CASE("gradient of -log sigmoid(beta x) at x = 0 is -beta/2") {
    Tensor x = Tensor::from_values(1, 1, {0.0}, true);
    Tensor loss = ad::neg_log_sigmoid(ad::scale(x, 0.1));
    loss.backward();
    CHECK(x.grad()[0] == doctest::Approx(-0.05).epsilon(1e-9));

    // matches central differences
    const double err = ad::gradient_check(
        [&] { return ad::neg_log_sigmoid(ad::scale(x, 0.1)); }, {x}, {.h = 1e-5});
    CHECK(err <= 1e-6);
}

TEST_CASE("shape mismatches throw") {
    const Tensor a = Tensor::zeros(2, 3);
    const Tensor b = Tensor::zeros(3, 3);
    CHECK_THROWS_AS((void)ad::add(a, b), Error);
    CHECK_THROWS_AS((void)ad::matmul(a, a), Error);
}

TEST_CASE("backward from a non-scalar throws") {
    Tensor a = Tensor::zeros(2, 2, true);
    CHECK_THROWS_AS(a.backward(), Error);
}

TEST_CASE("quadratic gradient is exact to finite-difference order") {
    Tensor x = Tensor::from_values(1, 1, {3.0}, true);
    const double err = ad::gradient_check([&] { return ad::mul(x, x); }, {x}, {.h = 1e-5});
    CHECK(err <= 1e-6);
}

TEST_CASE("constant function has zero gradient") {
    Tensor x = Tensor::from_values(1, 1, {2.0}, true);
    Tensor loss = ad::sum(ad::scale(x, 0.0));
    loss.backward();
    CHECK(x.grad()[0] == 0.0);
    const double err = ad::gradient_check([&] { return ad::sum(ad::scale(x, 0.0)); }, {x}, {});
    CHECK(err == 0.0);
}

TEST_CASE("every primitive matches central finite differences on random input") {
    Rng rng(7);
    auto random_tensor = [&rng](std::size_t r, std::size_t c) {
        Tensor t = Tensor::zeros(r, c, true);
        for (double& v : t.values()) v = rng.normal(0.0, 0.8);
        return t;
    };

    Tensor a = random_tensor(3, 4);
    Tensor b = random_tensor(3, 4);
    Tensor w = random_tensor(4, 5);
    Tensor row = random_tensor(1, 4);

    const std::vector<std::pair<const char*, std::function<Tensor()>>> cases = {
        {"add", [&] { return ad::sum(ad::tanh(ad::add(a, b))); }},
        {"sub", [&] { return ad::sum(ad::tanh(ad::sub(a, b))); }},
        {"mul", [&] { return ad::sum(ad::tanh(ad::mul(a, b))); }},
        {"add_row", [&] { return ad::sum(ad::tanh(ad::add_row(a, row))); }},
        {"matmul", [&] { return ad::sum(ad::tanh(ad::matmul(a, w))); }},
        {"transpose", [&] { return ad::sum(ad::tanh(ad::matmul(ad::transpose(a), b))); }},
        {"row_softmax", [&] { return ad::sum(ad::mul(ad::row_softmax(a), b)); }},
        {"log_softmax", [&] { return ad::sum(ad::mul(ad::log_softmax(a), b)); }},
        {"sigmoid", [&] { return ad::sum(ad::sigmoid(a)); }},
        {"tanh", [&] { return ad::sum(ad::tanh(a)); }},
        {"neg_log_sigmoid", [&] { return ad::sum(ad::neg_log_sigmoid(a)); }},
        {"rmsnorm", [&] { return ad::sum(ad::mul(ad::rmsnorm(a), b)); }},
        {"scale", [&] { return ad::sum(ad::scale(a, 1.7)); }},
        {"gather_rows", [&] { return ad::sum(ad::gather_rows(a, {2, 0, 2})); }},
        {"gather", [&] { return ad::sum(ad::gather(a, {0, 2, 1}, {3, 1, 1})); }},
    };
    for (const auto& [name, fn] : cases) {
        CAPTURE(name);
        const double err = ad::gradient_check(fn, {a, b, w, row}, {.h = 1e-5});
        CHECK(err <= 1e-4);
    }

    // log over strictly positive input
    Tensor pos = Tensor::zeros(2, 3, true);
    for (double& v : pos.values()) v = 0.5 + rng.uniform_double();
    CHECK(ad::gradient_check([&] { return ad::sum(ad::log(pos)); }, {pos}, {}) <= 1e-4);
}

TEST_CASE("random two-layer network passes the gradient check") {
    Rng rng(11);
    Tensor x = Tensor::zeros(2, 4);
    for (double& v : x.values()) v = rng.normal();
    Tensor w1 = Tensor::zeros(4, 8, true);
    Tensor w2 = Tensor::zeros(8, 2, true);
    for (double& v : w1.values()) v = rng.normal(0.0, 0.5);
    for (double& v : w2.values()) v = rng.normal(0.0, 0.5);

    auto loss = [&] { return ad::sum(ad::tanh(ad::matmul(ad::tanh(ad::matmul(x, w1)), w2))); };
    // 4*8 + 8*2 = 48 parameters, below the 64-coordinate cap: all checked
    const double err = ad::gradient_check(loss, {w1, w2}, {.h = 1e-5, .max_coordinates = 64});
    CHECK(err <= 1e-4);
}

TEST_CASE("backward is deterministic for identical graphs") {
    auto run = [] {
        Rng rng(3);
        Tensor a = Tensor::zeros(4, 4, true);
        for (double& v : a.values()) v = rng.normal();
        Tensor loss = ad::sum(ad::mul(ad::row_softmax(a), ad::rmsnorm(a)));
        loss.backward();
        return a.grad();
    };
    CHECK(run() == run());
}

TEST_CASE("no graph is recorded over frozen inputs") {
    Tensor a = Tensor::from_values(2, 2, {1, 2, 3, 4}, false);
    Tensor out = ad::matmul(a, a);
    CHECK_FALSE(out.requires_grad());
    CHECK(out.node()->parents.empty());
}

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "wahmvc/error.hpp"
#include "wahmvc/lorentz_nn.hpp"

using namespace wahmvc;
using namespace wahmvc::nn;
using geometry::Curvature;

namespace {

ViewEncoder small_encoder(std::uint64_t seed, Curvature k = {}, Activation act = Activation::identity) {
    EncoderArchitecture arch;
    arch.input_dim = 5;
    arch.hidden = {7, 6};
    arch.euclidean_dim = 4;
    arch.lorentz_dims = {3, 3};
    arch.clusters = 3;
    arch.lorentz_activation = act;
    arch.curvature = k;
    Rng rng(seed);
    ViewEncoder enc(arch, rng);
    enc.head().a = Vector::LinSpaced(3, -0.4, 0.6);
    enc.head().z *= 4.0;
    return enc;
}

// Scalar objective with fixed random upstream weights on both outputs.
double probe(const ViewEncoder& enc, const Matrix& x, const Matrix& we, const Matrix& wl) {
    const auto out = enc.infer(x);
    return (out.embeddings.array() * we.array()).sum() + (out.logits.array() * wl.array()).sum();
}

}  // namespace

TEST_CASE("dense layer") {
    Rng rng(1);
    const Matrix x = testing::gaussian(4, 3, rng);
    DenseLayer id{Matrix::Identity(3, 3), Vector::Zero(3), Activation::identity};
    CHECK(dense_forward(id, x) == x);
    DenseLayer neg{Matrix::Identity(3, 3), Vector::Constant(3, -100.0), Activation::relu};
    CHECK(dense_forward(neg, x).isZero(0.0));

    DenseLayer rnd{testing::gaussian(2, 3, rng), testing::gaussian(2, 1, rng), Activation::identity};
    const Matrix y = dense_forward(rnd, x);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) {
            double s = rnd.bias(j);
            for (int c = 0; c < 3; ++c) s += rnd.weight(j, c) * x(i, c);
            CHECK(std::abs(y(i, j) - s) < 1e-12);
        }
    CHECK_THROWS_AS(dense_forward(rnd, testing::gaussian(4, 5, rng)), DimensionError);
}

TEST_CASE("exp-map lift") {
    const Curvature k;
    Matrix x = Matrix::Zero(2, 2);
    x(1, 0) = 1.0;
    const Points p = lift_to_lorentz(x, k);
    CHECK(p(0, 0) == 1.0);
    CHECK(p.row(0).tail(2).norm() == 0.0);
    CHECK(p(1, 0) == doctest::Approx(std::cosh(1.0)).epsilon(1e-15));
    CHECK(p(1, 1) == doctest::Approx(std::sinh(1.0)).epsilon(1e-15));
    Rng rng(2);
    const Points q = lift_to_lorentz(testing::gaussian(20, 6, rng), Curvature(-0.5));
    for (Eigen::Index i = 0; i < 20; ++i) CHECK(geometry::on_manifold(q.row(i).transpose(), Curvature(-0.5)));
}

TEST_CASE("LorentzFC layer") {
    const Curvature k;
    LorentzFcLayer zero{Matrix::Zero(2, 4), Vector::Zero(2), Activation::identity, k};
    Rng rng(3);
    const Points x = testing::random_points(5, 3, 1.0, 4);
    const Points y0 = lorentz_fc_forward(zero, x);
    for (Eigen::Index i = 0; i < 5; ++i) CHECK((y0.row(i).transpose() - geometry::origin(2, k)).norm() == 0.0);

    LorentzFcLayer unit{Matrix::Zero(2, 4), Vector::Zero(2), Activation::identity, k};
    unit.bias(0) = 1.0;
    const Points y1 = lorentz_fc_forward(unit, x);
    CHECK(y1(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(y1(0, 1) == 1.0);
    CHECK(y1(0, 2) == 0.0);

    for (double kv : {-1.0, -0.25, -3.0}) {
        LorentzFcLayer rnd{testing::gaussian(6, 4, rng), testing::gaussian(6, 1, rng), Activation::relu, Curvature(kv)};
        const Points y = lorentz_fc_forward(rnd, testing::random_points(10, 3, 1.0, 5, Curvature(kv)));
        for (Eigen::Index i = 0; i < 10; ++i)
            CHECK(std::abs(geometry::minkowski_inner(y.row(i).transpose(), y.row(i).transpose()) - 1.0 / kv) <= 1e-9);
    }
}

TEST_CASE("LorentzMLR logits") {
    const Curvature k;
    Rng rng(6);
    LorentzMlrHead head{Vector::Zero(3), testing::gaussian(3, 4, rng), k};
    Points o(1, 5);
    o.row(0) = geometry::origin(4, k).transpose();
    CHECK(lorentz_mlr_logits(head, o).cwiseAbs().maxCoeff() == 0.0);

    head.a << 0.3, -1.2, 2.0;
    const Matrix l = lorentz_mlr_logits(head, o);
    for (int c = 0; c < 3; ++c) CHECK(l(0, c) == doctest::Approx(-head.a(c) * head.z.row(c).norm()).epsilon(1e-12));

    head.z.row(1).setZero();
    CHECK_THROWS_AS(lorentz_mlr_logits(head, o), DomainError);

    const Matrix same = Matrix::Constant(2, 4, 1.7);
    const Matrix s = softmax_rows(same);
    CHECK((s.array() - 0.25).abs().maxCoeff() < 1e-15);
    const Matrix r = softmax_rows(testing::gaussian(5, 4, rng) * 30.0);
    CHECK((r.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("logits ignore time-coordinate reconstruction") {
    ViewEncoder enc = small_encoder(9);
    const Points x = testing::random_points(6, 3, 1.2, 3);
    Points y = x;
    geometry::reproject_rows(y, Curvature{});
    CHECK((lorentz_mlr_logits(enc.head(), x) - lorentz_mlr_logits(enc.head(), y)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("encoder forward outputs stay on the manifold") {
    Rng rng(7);
    for (double kv : {-1.0, -2.5}) {
        ViewEncoder enc = small_encoder(10, Curvature(kv), Activation::relu);
        const auto out = enc.forward(testing::gaussian(9, 5, rng) * 10.0);
        for (Eigen::Index i = 0; i < 9; ++i) CHECK(geometry::on_manifold(out.embeddings.row(i).transpose(), Curvature(kv)));
        CHECK(out.logits.rows() == 9);
        CHECK(out.logits.cols() == 3);
    }
}

TEST_CASE("identical encoders give identical outputs") {
    ViewEncoder a = small_encoder(12), b = small_encoder(12);
    Rng rng(8);
    const Matrix x = testing::gaussian(4, 5, rng);
    CHECK(a.forward(x).embeddings == b.forward(x).embeddings);
    CHECK(a.infer(x).logits == b.forward(x).logits);
}

TEST_CASE("backward requires a forward cache") {
    ViewEncoder enc = small_encoder(13);
    CHECK_THROWS_AS(enc.backward(Points::Zero(2, 4), Matrix::Zero(2, 3)), StateError);
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
    ViewEncoder enc = small_encoder(14);
    Rng rng(9);
    enc.forward(testing::gaussian(3, 5, rng));
    enc.backward(Points::Zero(3, 4), Matrix::Zero(3, 3));
    for (const auto& p : enc.parameters())
        for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p.grad[i] == 0.0);
}

TEST_CASE("encoder gradients match central differences") {
    for (int seed = 0; seed < 20; ++seed) {
        const Curvature k(seed % 2 ? -1.0 : -0.6);
        ViewEncoder enc = small_encoder(100 + seed, k, seed % 3 == 0 ? Activation::relu : Activation::identity);
        Rng rng(200 + seed);
        const Eigen::Index b = 1 + seed % 4;
        const Matrix x = testing::gaussian(b, 5, rng);
        const Matrix we = testing::gaussian(b, 4, rng), wl = testing::gaussian(b, 3, rng);

        enc.zero_grad();
        enc.forward(x);
        enc.backward(we, wl);
        const double h = 1e-5;
        for (auto& p : enc.parameters()) {
            for (Eigen::Index i = 0; i < p.size(); ++i) {
                const double saved = p.value[i];
                p.value[i] = saved + h;
                const double up = probe(enc, x, we, wl);
                p.value[i] = saved - h;
                const double down = probe(enc, x, we, wl);
                p.value[i] = saved;
                const double fd = (up - down) / (2 * h);
                const double rel = std::abs(fd - p.grad[i]) / std::max({std::abs(fd), std::abs(p.grad[i]), 1e-5});
                INFO(p.name << "[" << i << "] seed " << seed);
                CHECK(rel <= 1e-4);
            }
        }
    }
}

TEST_CASE("time-coordinate derivative of the LorentzFC output") {
    // d y0 / d s = s / sqrt(||s||^2 - 1/K): check via a bias-only layer.
    const Curvature k(-2.0);
    LorentzFcLayer layer{Matrix::Zero(3, 3), Vector(3), Activation::identity, k};
    layer.bias << 0.3, -1.1, 0.7;
    Points x(1, 3);
    x.row(0) = geometry::origin(2, k).transpose();
    const double y0 = lorentz_fc_forward(layer, x)(0, 0);
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
        LorentzFcLayer up = layer, down = layer;
        up.bias(j) += h;
        down.bias(j) -= h;
        const double fd = (lorentz_fc_forward(up, x)(0, 0) - lorentz_fc_forward(down, x)(0, 0)) / (2 * h);
        CHECK(fd == doctest::Approx(layer.bias(j) / y0).epsilon(1e-8));
    }
}

TEST_CASE("parameter naming") {
    ViewEncoder enc = small_encoder(15);
    const auto params = enc.parameters();
    std::vector<std::string> names;
    for (const auto& p : params) names.push_back(p.name);
    const std::vector<std::string> expected{"dense0.weight", "dense0.bias", "dense1.weight", "dense1.bias",
                                            "dense2.weight", "dense2.bias", "lorentz0.weight", "lorentz0.bias",
                                            "lorentz1.weight", "lorentz1.bias", "mlr.a", "mlr.z"};
    CHECK(names == expected);
    CHECK(enc.input_dim() == 5);
    CHECK(enc.dense_layers().back().activation == Activation::identity);
}

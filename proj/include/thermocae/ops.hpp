#pragma once

// Differentiable operations over Graph variables. Each op validates shapes,
// computes its value eagerly and records a closure for the reverse sweep.

#include <span>
#include <vector>

#include "thermocae/graph.hpp"
#include "thermocae/kernels.hpp"

namespace thermocae {

enum class Activation { relu, sigmoid };

/// x [N,Cin,H,W], w [Cout,Cin,k,k], b [Cout] -> [N,Cout,H',W'] (cross-correlation).
Var conv2d(Var x, Var w, Var b, const ConvSpec& spec = {});
/// x [N,Cin,h,w], w [Cin,Cout,k,k], b [Cout] -> [N,Cout,H,W]; adjoint of conv2d.
Var conv_transpose2d(Var x, Var w, Var b, const ConvSpec& spec = {});
/// x [N,F], w [F,G], b [G] -> [N,G]
Var dense(Var x, Var w, Var b);

Var activation(Var x, Activation kind);
inline Var relu(Var x) { return activation(x, Activation::relu); }
inline Var sigmoid(Var x) { return activation(x, Activation::sigmoid); }

Var reshape(Var x, Shape shape);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var add_scalar(Var x, double c);
Var scale(Var x, double c);
Var square(Var x);
/// max(x, 0)^p elementwise, with zero derivative wherever x <= 0.
Var clamp_pow(Var x, double p);

/// Separable "valid" filter over the two trailing axes with the same 1-D
/// taps along rows and columns.
Var separable_filter_valid(Var x, std::span<const double> taps);
/// 2x2 mean pooling over the two trailing axes (trailing odd row/col dropped).
Var avg_pool2(Var x);
/// Mean over every axis but the first: [N, ...] -> [N].
Var per_sample_mean(Var x);

Var sum(Var x);
Var mean(Var x);

}  // namespace thermocae

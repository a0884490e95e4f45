#pragma once

#include <functional>
#include <span>
#include <variant>

#include "afl/nn/model.hpp"
#include "afl/nn/tensor.hpp"

namespace afl::nn {

// Row-wise softmax of logits / temperature, max-subtracted.
Tensor softmax(const Tensor& logits, double temperature = 1.0);
std::vector<double> softmax_row(std::span<const double> logits, double temperature = 1.0);

// First index of the maximum; ties resolve to the lower class.
std::size_t argmax(std::span<const double> row);

struct LossGrad {
    double value = 0.0;
    Tensor dlogits;
};

// Mean cross-entropy over the batch against hard labels.
LossGrad cross_entropy(const Tensor& logits, std::span<const int> labels);

// Mean over the batch of KL(softmax(t/T) || softmax(s/T)).
double kl_divergence(const Tensor& teacher_logits, const Tensor& student_logits,
                     double temperature);

// Same value; gradient is with respect to the student logits.
LossGrad kl_student_grad(const Tensor& teacher_logits, const Tensor& student_logits,
                         double temperature);

// Per-row KL(softmax(t/T) || softmax(s/T)) and its gradient w.r.t. t.
double kl_row(std::span<const double> teacher, std::span<const double> student,
              double temperature);
void kl_row_teacher_grad(std::span<const double> teacher, std::span<const double> student,
                         double temperature, std::span<double> out);

struct HardLabels {
    std::span<const int> labels;
};
struct TeacherLogits {
    const Tensor* logits;
    double temperature = 1.0;
};
// Arbitrary loss on top of a forward pass; returns the value and dL/dlogits.
using LossClosure = std::function<LossGrad(const ForwardResult&)>;

using Loss = std::variant<HardLabels, TeacherLogits, LossClosure>;

struct LossAndGradient {
    double loss = 0.0;
    ParamVector grad;
};

// dLoss/dparams for one batch. Non-finite loss raises NumericError with the
// first offending layer.
LossAndGradient gradient(const ModelSpec& spec, const ParamVector& params, const Tensor& batch,
                         const Loss& loss);

}  // namespace afl::nn

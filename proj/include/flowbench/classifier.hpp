#pragma once

#include "flowbench/logistic.hpp"
#include "flowbench/naive_bayes.hpp"
#include "flowbench/nn.hpp"
#include "flowbench/tree.hpp"

#include <iosfwd>
#include <string>
#include <variant>

namespace flowbench {

enum class ClassifierKind { dff, cnn, rnn, dt, lr, nb };

std::string to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view name);
bool is_deep(ClassifierKind kind);

enum class DropoutPlacement {
  before_output,      // one dropout between the last hidden layer and the output
  after_each_hidden,  // dropout after every hidden dense layer
};

inline constexpr double kDropoutRate = 0.2;

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::dt;
  int input_dim = 0;
  nn::NetSpec net;  // deep kinds only
  LrOptions lr;
  double var_smoothing = kGnbVarSmoothing;
  bool weight_shallow = false;  // also apply class weights to DT and LR

  void validate() const;
};

/// dense(20, relu) x 3 -> dropout(0.2) -> dense(1, sigmoid).
ClassifierSpec build_dff(int input_dim, DropoutPlacement dropout = DropoutPlacement::before_output);

/// Features as a length-d one-channel sequence. For d >= 10:
/// conv(20,k3) -> pool2 -> conv(20,k2) -> pool2 -> conv(20,k1) -> dropout -> flatten -> dense(1).
/// For d < 10 the hidden convolutions are removed and the kernel is 1:
/// conv(20,k1) -> pool2 (when d >= 2) -> dropout -> flatten -> dense(1).
ClassifierSpec build_cnn(int input_dim);

/// One time step carrying all d features:
/// lstm(d) -> dense(10, relu) -> dropout(0.2) -> dense(1, sigmoid).
ClassifierSpec build_rnn(int input_dim);

ClassifierSpec make_classifier(ClassifierKind kind, int input_dim);

using ClassifierModel = std::variant<nn::NetParams, DecisionTree, LrModel, GnbModel>;

struct FittedClassifier {
  ClassifierKind kind = ClassifierKind::dt;
  ClassifierModel model;
};

/// Deep kinds train with class weights from the training labels unless the
/// config already carries weights.
FittedClassifier fit_classifier(const ClassifierSpec& spec, const FeatureMatrix& train,
                                const nn::TrainConfig& config);

/// Probability of class 1 for every row.
Vector score(const FittedClassifier& model, const Matrix& m);

Vector fit_predict(const ClassifierSpec& spec, const FeatureMatrix& train, const FeatureMatrix& test,
                   const nn::TrainConfig& config);

void save_classifier(std::ostream& out, const FittedClassifier& model);
FittedClassifier load_classifier(std::istream& in);

}  // namespace flowbench

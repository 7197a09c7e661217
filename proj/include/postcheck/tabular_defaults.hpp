#pragma once

// Default hyperparameters for the metadata learners. Each value can be
// overridden through BaseLearnerSpec::hyperparameters under the same key.
namespace postcheck::tabular::defaults {

inline constexpr double kLogisticC = 1.0;
inline constexpr int kLogisticMaxIter = 100;

inline constexpr double kLdaRidge = 1e-6;

inline constexpr int kKnnNeighbors = 5;

inline constexpr int kTreeMaxDepth = 0;  // 0 = unlimited
inline constexpr int kTreeMinSamplesSplit = 2;
inline constexpr int kTreeMinSamplesLeaf = 1;

inline constexpr double kNbVarSmoothing = 1e-9;

inline constexpr double kSvmC = 1.0;
inline constexpr int kSvmMaxIter = 1000;
inline constexpr double kSvmTol = 1e-4;

inline constexpr int kAdaBoostEstimators = 50;
inline constexpr double kAdaBoostLearningRate = 1.0;

inline constexpr int kGbEstimators = 100;
inline constexpr int kGbMaxDepth = 3;
inline constexpr double kGbLearningRate = 0.1;
inline constexpr double kGbSubsample = 1.0;

inline constexpr int kForestEstimators = 100;  // random_forest and extra_trees

inline constexpr int kMlpEpochs = 20;
inline constexpr int kMlpBatch = 32;
inline constexpr double kMlpLearningRate = 1e-3;
inline constexpr double kMlpDropout = 0.2;

inline constexpr int kStackingFolds = 5;
inline constexpr double kBlendingHoldout = 0.2;
inline constexpr int kBlendingRetries = 10;

}  // namespace postcheck::tabular::defaults

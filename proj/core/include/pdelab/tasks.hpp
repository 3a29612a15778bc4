#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pdelab {

struct Example {
  std::vector<int> tokens;  // unpadded; the model pads with token 0
  int label = 0;
};

struct TaskDataset {
  std::string name;
  std::vector<Example> train;
  std::vector<Example> val;
  int num_classes = 0;
  int vocab = 0;
  int max_len = 0;

  /// Throws InvalidArgument if a sequence is too long, a token is outside
  /// the vocabulary or a label is out of range.
  void validate() const;
  /// Most frequent training label (lowest id on ties).
  int majority_class() const;
  /// Validation accuracy of always predicting majority_class().
  double majority_accuracy() const;
};

namespace listops {

inline constexpr int kPad = 0;
inline constexpr int kMax = 11;
inline constexpr int kMin = 12;
inline constexpr int kMed = 13;  // lower median
inline constexpr int kSumMod = 14;
inline constexpr int kClose = 15;
inline constexpr int kVocab = 16;

/// Digit v in [0, 9] is token v + 1.
constexpr int digit_token(int v) { return v + 1; }

/// Reference evaluator; throws InvalidArgument on malformed input.
int evaluate(std::span<const int> tokens);

std::string render(std::span<const int> tokens);

}  // namespace listops

struct ListOpsOptions {
  int max_len = 64;
  int max_depth = 3;
  int min_args = 2;
  int max_args = 4;
  int train_size = 10000;
  int val_size = 1000;
  std::uint64_t seed = 0;
};

/// Nested MAX / MIN / MED / SUM-mod-10 expressions over digits, 10 classes.
TaskDataset make_listops_mini(const ListOpsOptions& options);

struct DenoiseOptions {
  int length = 64;
  int num_classes = 4;
  int levels = 8;
  double noise = 0.6;
  int train_size = 4000;
  int val_size = 500;
  std::uint64_t seed = 0;
};

/// Identify which of `num_classes` smooth templates produced a noisy,
/// quantised signal. Tokens 1..levels are amplitude bins.
TaskDataset make_denoise_1d(const DenoiseOptions& options);

/// One example per line: "label<TAB>tok tok tok".
std::string format_examples(std::span<const Example> examples);
std::vector<Example> parse_examples(const std::string& text);

}  // namespace pdelab

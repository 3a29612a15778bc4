#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "pdelab/errors.hpp"
#include "pdelab/tasks.hpp"

namespace pdelab {
namespace {

using namespace listops;

constexpr int d(int v) { return digit_token(v); }

// Stack machine: push operators and digits, reduce on ']'.
int stack_eval(const std::vector<int>& tokens) {
  std::vector<std::vector<int>> frames;
  std::vector<int> ops;
  int result = -1;
  for (int t : tokens) {
    if (t == kPad) break;
    if (t >= kMax && t <= kSumMod) {
      ops.push_back(t);
      frames.emplace_back();
    } else if (t == kClose) {
      std::vector<int> args = frames.back();
      frames.pop_back();
      const int op = ops.back();
      ops.pop_back();
      std::sort(args.begin(), args.end());
      int v = 0;
      if (op == kMax) v = args.back();
      if (op == kMin) v = args.front();
      if (op == kMed) v = args[(args.size() - 1) / 2];
      if (op == kSumMod) v = std::accumulate(args.begin(), args.end(), 0) % 10;
      if (frames.empty()) result = v;
      else frames.back().push_back(v);
    } else {
      if (frames.empty()) return t - 1;
      frames.back().push_back(t - 1);
    }
  }
  return result;
}

TEST(ListOps, HandWorkedExpressions) {
  EXPECT_EQ(evaluate(std::vector<int>{kMax, d(2), d(9), d(4), kClose}), 9);
  EXPECT_EQ(evaluate(std::vector<int>{kMin, d(2), d(9), d(4), kClose}), 2);
  EXPECT_EQ(evaluate(std::vector<int>{kMed, d(7), d(1), d(4), d(3), kClose}), 3);
  EXPECT_EQ(evaluate(std::vector<int>{kSumMod, d(7), d(8), d(9), kClose}), 4);
  // MAX(3, MIN(8, 5), SM(6, 6)) = MAX(3, 5, 2) = 5
  EXPECT_EQ(evaluate(std::vector<int>{kMax, d(3), kMin, d(8), d(5), kClose, kSumMod, d(6), d(6), kClose, kClose}), 5);
  EXPECT_EQ(evaluate(std::vector<int>{kMin, d(0), d(1), kClose, kPad, kPad}), 0);
}

TEST(ListOps, MalformedInputThrows) {
  EXPECT_THROW(evaluate(std::vector<int>{kMax, d(1), d(2)}), InvalidArgument);
  EXPECT_THROW(evaluate(std::vector<int>{kMax, kClose}), InvalidArgument);
  EXPECT_THROW(evaluate(std::vector<int>{kMax, d(1), kClose, d(2)}), InvalidArgument);
  EXPECT_THROW(evaluate(std::vector<int>{}), InvalidArgument);
}

TEST(ListOps, GeneratorAgreesWithStackOracle) {
  ListOpsOptions o;
  o.train_size = 2000;
  o.val_size = 200;
  o.seed = 5;
  const auto ds = make_listops_mini(o);
  EXPECT_NO_THROW(ds.validate());
  EXPECT_EQ(ds.num_classes, 10);
  EXPECT_EQ(ds.vocab, kVocab);
  std::vector<int> counts(10, 0);
  int max_depth = 0;
  for (const auto& ex : ds.train) {
    ASSERT_LE(static_cast<int>(ex.tokens.size()), o.max_len);
    ASSERT_EQ(stack_eval(ex.tokens), ex.label) << render(ex.tokens);
    ++counts[static_cast<std::size_t>(ex.label)];
    int depth = 0;
    for (int t : ex.tokens) {
      if (t >= kMax && t <= kSumMod) max_depth = std::max(max_depth, ++depth);
      if (t == kClose) --depth;
    }
  }
  EXPECT_LE(max_depth, o.max_depth);
  EXPECT_GE(max_depth, 2);
  for (int c : counts) EXPECT_GT(c, 50);
}

TEST(ListOps, DeterministicGivenSeed) {
  ListOpsOptions o;
  o.train_size = 100;
  o.val_size = 10;
  const auto a = make_listops_mini(o);
  const auto b = make_listops_mini(o);
  EXPECT_EQ(format_examples(a.train), format_examples(b.train));
  o.seed = 1;
  EXPECT_NE(format_examples(a.train), format_examples(make_listops_mini(o).train));
}

TEST(Denoise, ShapesAndValidation) {
  DenoiseOptions o;
  o.train_size = 200;
  o.val_size = 50;
  const auto ds = make_denoise_1d(o);
  EXPECT_NO_THROW(ds.validate());
  EXPECT_EQ(ds.vocab, o.levels + 1);
  for (const auto& ex : ds.train) {
    EXPECT_EQ(static_cast<int>(ex.tokens.size()), o.length);
    for (int t : ex.tokens) {
      EXPECT_GE(t, 1);
      EXPECT_LE(t, o.levels);
    }
  }
}

TEST(Dataset, MajorityAndValidation) {
  TaskDataset ds;
  ds.num_classes = 3;
  ds.vocab = 4;
  ds.max_len = 3;
  ds.train = {{{1}, 2}, {{2}, 2}, {{3}, 0}, {{1}, 1}};
  ds.val = {{{1}, 2}, {{1}, 0}, {{1}, 2}, {{1}, 1}};
  EXPECT_EQ(ds.majority_class(), 2);
  EXPECT_DOUBLE_EQ(ds.majority_accuracy(), 0.5);
  ds.val.push_back({{4}, 0});
  EXPECT_THROW(ds.validate(), InvalidArgument);
  ds.val.back() = {{1, 1, 1, 1}, 0};
  EXPECT_THROW(ds.validate(), InvalidArgument);
  ds.val.back() = {{1}, 3};
  EXPECT_THROW(ds.validate(), InvalidArgument);
}

TEST(ExampleText, RoundTrip) {
  const std::vector<Example> ex = {{{11, 3, 4, 15}, 3}, {{1}, 0}};
  const std::string text = format_examples(ex);
  EXPECT_EQ(text, "3\t11 3 4 15\n0\t1\n");
  const auto back = parse_examples(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].tokens, ex[0].tokens);
  EXPECT_EQ(back[1].label, 0);
}

}  // namespace
}  // namespace pdelab

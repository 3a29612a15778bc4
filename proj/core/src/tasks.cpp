#include "pdelab/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "pdelab/errors.hpp"

namespace pdelab {

void TaskDataset::validate() const {
  if (num_classes < 1 || vocab < 1 || max_len < 1) throw InvalidArgument("dataset '" + name + "' has empty dimensions");
  auto check = [&](const std::vector<Example>& split, const char* which) {
    for (std::size_t i = 0; i < split.size(); ++i) {
      const auto& ex = split[i];
      if (ex.tokens.empty() || static_cast<int>(ex.tokens.size()) > max_len)
        throw InvalidArgument(std::string(which) + " example " + std::to_string(i) + " has bad length");
      if (ex.label < 0 || ex.label >= num_classes)
        throw InvalidArgument(std::string(which) + " example " + std::to_string(i) + " has label out of range");
      for (int t : ex.tokens)
        if (t < 0 || t >= vocab) throw InvalidArgument(std::string(which) + " example " + std::to_string(i) + " has token out of range");
    }
  };
  check(train, "train");
  check(val, "val");
}

int TaskDataset::majority_class() const {
  std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
  for (const auto& ex : train) ++counts[static_cast<std::size_t>(ex.label)];
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

double TaskDataset::majority_accuracy() const {
  if (val.empty()) return 0.0;
  const int m = majority_class();
  const auto hits = std::count_if(val.begin(), val.end(), [m](const Example& ex) { return ex.label == m; });
  return static_cast<double>(hits) / static_cast<double>(val.size());
}

namespace listops {

namespace {

struct Parser {
  std::span<const int> tokens;
  std::size_t pos = 0;

  int parse() {
    if (pos >= tokens.size()) throw InvalidArgument("listops: unexpected end of expression");
    const int t = tokens[pos++];
    if (t >= digit_token(0) && t <= digit_token(9)) return t - 1;
    if (t < kMax || t > kSumMod) throw InvalidArgument("listops: unexpected token " + std::to_string(t));
    std::vector<int> args;
    while (pos < tokens.size() && tokens[pos] != kClose) args.push_back(parse());
    if (pos >= tokens.size()) throw InvalidArgument("listops: missing close bracket");
    ++pos;
    if (args.empty()) throw InvalidArgument("listops: operator without arguments");
    switch (t) {
      case kMax: return *std::max_element(args.begin(), args.end());
      case kMin: return *std::min_element(args.begin(), args.end());
      case kMed: {
        std::sort(args.begin(), args.end());
        return args[(args.size() - 1) / 2];
      }
      default: {
        int s = 0;
        for (int a : args) s += a;
        return s % 10;
      }
    }
  }
};

}  // namespace

int evaluate(std::span<const int> tokens) {
  std::size_t n = tokens.size();
  while (n > 0 && tokens[n - 1] == kPad) --n;
  Parser p{tokens.first(n)};
  const int v = p.parse();
  if (p.pos != n) throw InvalidArgument("listops: trailing tokens");
  return v;
}

std::string render(std::span<const int> tokens) {
  static const char* names[] = {"[MAX", "[MIN", "[MED", "[SM", "]"};
  std::string out;
  for (int t : tokens) {
    if (t == kPad) continue;
    if (!out.empty()) out += ' ';
    if (t >= digit_token(0) && t <= digit_token(9))
      out += std::to_string(t - 1);
    else if (t >= kMax && t <= kClose)
      out += names[t - kMax];
    else
      out += '?';
  }
  return out;
}

}  // namespace listops

namespace {

void grow(std::mt19937_64& rng, const ListOpsOptions& opt, int depth, std::vector<int>& out) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> digit(0, 9);
  const bool leaf = depth >= opt.max_depth || (depth > 0 && unit(rng) < 0.55);
  if (leaf) {
    out.push_back(listops::digit_token(digit(rng)));
    return;
  }
  std::uniform_int_distribution<int> op(listops::kMax, listops::kSumMod);
  std::uniform_int_distribution<int> nargs(opt.min_args, opt.max_args);
  out.push_back(op(rng));
  const int n = nargs(rng);
  for (int i = 0; i < n; ++i) grow(rng, opt, depth + 1, out);
  out.push_back(listops::kClose);
}

std::vector<Example> listops_split(std::mt19937_64& rng, const ListOpsOptions& opt, int count) {
  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(out.size()) < count) {
    Example ex;
    grow(rng, opt, 0, ex.tokens);
    if (static_cast<int>(ex.tokens.size()) > opt.max_len) continue;
    ex.label = listops::evaluate(ex.tokens);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

TaskDataset make_listops_mini(const ListOpsOptions& options) {
  if (options.max_depth < 1 || options.min_args < 1 || options.max_args < options.min_args)
    throw InvalidArgument("listops-mini: bad nesting options");
  if (options.max_len < 2 + options.min_args) throw InvalidArgument("listops-mini: max_len too short");
  if (options.train_size < 1 || options.val_size < 1) throw InvalidArgument("listops-mini: empty split");
  std::mt19937_64 rng(options.seed);
  TaskDataset ds;
  ds.name = "listops-mini";
  ds.num_classes = 10;
  ds.vocab = listops::kVocab;
  ds.max_len = options.max_len;
  ds.train = listops_split(rng, options, options.train_size);
  ds.val = listops_split(rng, options, options.val_size);
  return ds;
}

TaskDataset make_denoise_1d(const DenoiseOptions& options) {
  if (options.length < 2 || options.num_classes < 2 || options.levels < 2)
    throw InvalidArgument("denoise-1d: length, classes and levels must be >= 2");
  if (options.train_size < 1 || options.val_size < 1) throw InvalidArgument("denoise-1d: empty split");
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<std::vector<double>> templates;
  for (int c = 0; c < options.num_classes; ++c) {
    const double ph = phase(rng);
    std::vector<double> t(static_cast<std::size_t>(options.length));
    for (int i = 0; i < options.length; ++i)
      t[static_cast<std::size_t>(i)] =
          std::sin(2.0 * std::numbers::pi * (c + 1) * i / options.length + ph);
    templates.push_back(std::move(t));
  }
  std::uniform_int_distribution<int> cls(0, options.num_classes - 1);
  std::normal_distribution<double> noise(0.0, options.noise);
  auto split = [&](int count) {
    std::vector<Example> out;
    for (int n = 0; n < count; ++n) {
      Example ex;
      ex.label = cls(rng);
      for (double v : templates[static_cast<std::size_t>(ex.label)]) {
        const double x = std::clamp((v + noise(rng) + 1.5) / 3.0, 0.0, 1.0 - 1e-12);
        ex.tokens.push_back(1 + static_cast<int>(x * options.levels));
      }
      out.push_back(std::move(ex));
    }
    return out;
  };
  TaskDataset ds;
  ds.name = "denoise-1d";
  ds.num_classes = options.num_classes;
  ds.vocab = options.levels + 1;
  ds.max_len = options.length;
  ds.train = split(options.train_size);
  ds.val = split(options.val_size);
  return ds;
}

std::string format_examples(std::span<const Example> examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += std::to_string(ex.label);
    out += '\t';
    for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(ex.tokens[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<Example> parse_examples(const std::string& text) {
  std::vector<Example> out;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw InvalidArgument("line " + std::to_string(lineno) + ": missing tab");
    Example ex;
    try {
      ex.label = std::stoi(line.substr(0, tab));
    } catch (const std::exception&) {
      throw InvalidArgument("line " + std::to_string(lineno) + ": bad label");
    }
    std::istringstream toks(line.substr(tab + 1));
    std::string tok;
    while (toks >> tok) {
      try {
        ex.tokens.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw InvalidArgument("line " + std::to_string(lineno) + ": bad token '" + tok + "'");
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace pdelab

#ifndef ADVSTICKER_ORACLE_HPP
#define ADVSTICKER_ORACLE_HPP

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "advsticker/geometry.hpp"
#include "advsticker/image.hpp"
#include "advsticker/param_space.hpp"

namespace advsticker {

struct LabelScore {
  std::string label;
  double prob = 0.0;

  friend bool operator==(const LabelScore&, const LabelScore&) = default;
};

// Label probabilities from one oracle call, sorted by descending probability
// (ties keep their input order). May be the full gallery or a top-k list.
class QueryResult {
 public:
  QueryResult() = default;
  // Throws std::invalid_argument on a probability outside [0, 1] or NaN.
  explicit QueryResult(std::vector<LabelScore> scores);

  const std::vector<LabelScore>& scores() const { return scores_; }
  bool empty() const { return scores_.empty(); }

  // Probability of `label`, 0 when the label was not returned.
  double prob(std::string_view label) const;
  const std::string& top1() const;
  const std::string& top2() const;
  double top1_prob() const;
  double top2_prob() const;

  friend bool operator==(const QueryResult&, const QueryResult&) = default;

 private:
  std::vector<LabelScore> scores_;
};

// Queries issued against a model, with an optional hard cap.
class QueryCounter {
 public:
  explicit QueryCounter(std::optional<std::int64_t> budget = std::nullopt)
      : budget_(budget) {}

  // Reserves one query; throws BudgetExhausted when the cap is reached.
  void charge();
  std::int64_t count() const { return count_.load(); }
  std::optional<std::int64_t> budget() const { return budget_; }

 private:
  std::atomic<std::int64_t> count_{0};
  std::optional<std::int64_t> budget_;
};

// A face-recognition model that can only be queried.
class ImageOracle {
 public:
  virtual ~ImageOracle() = default;
  virtual QueryResult query(const Image& face) = 0;
  virtual std::vector<std::string> labels() = 0;
};

using ImageDigest = std::array<std::uint8_t, 32>;

// SHA-256 over shape and raw channel bytes.
ImageDigest digest(const Image& image);

struct DigestHash {
  std::size_t operator()(const ImageDigest& d) const noexcept;
};

// Adds query accounting and a bit-identical-image cache in front of an
// oracle. Cache hits are free; `cache = false` charges every call.
class CountingOracle final : public ImageOracle {
 public:
  CountingOracle(ImageOracle& inner, std::optional<std::int64_t> budget,
                 bool cache = true)
      : inner_(inner), counter_(budget), cache_enabled_(cache) {}

  QueryResult query(const Image& face) override;
  std::vector<std::string> labels() override { return inner_.labels(); }

  std::int64_t count() const { return counter_.count(); }
  const QueryCounter& counter() const { return counter_; }

 private:
  ImageOracle& inner_;
  QueryCounter counter_;
  bool cache_enabled_;
  std::shared_mutex cache_mutex_;
  std::unordered_map<ImageDigest, QueryResult, DigestHash> cache_;
};

// Scores an oracle through a callback. Used by tests and adapters.
class FunctionOracle final : public ImageOracle {
 public:
  using ScoreFn = std::function<QueryResult(const Image&)>;
  FunctionOracle(ScoreFn fn, std::vector<std::string> labels)
      : fn_(std::move(fn)), labels_(std::move(labels)) {}

  QueryResult query(const Image& face) override { return fn_(face); }
  std::vector<std::string> labels() override { return labels_; }

 private:
  ScoreFn fn_;
  std::vector<std::string> labels_;
};

// Fitness evaluation of attack parameters: theta -> QueryResult, with the
// query accounting of the underlying model.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual QueryResult evaluate(const ParamVector& theta) = 0;
  // Model queries charged so far.
  virtual std::int64_t queries() const = 0;
  // Composited face for theta, when the evaluator works on images.
  virtual std::optional<Image> render(const ParamVector&) const {
    return std::nullopt;
  }
};

// Composites the sticker for theta and queries an image oracle.
class ImageEvaluator final : public Evaluator {
 public:
  ImageEvaluator(const Image& face, const Sticker& sticker,
                 const FaceSurface& surface, const ValidIndex& index,
                 CountingOracle& oracle, CompositeOptions options = {})
      : face_(face), sticker_(sticker), surface_(surface), index_(index),
        oracle_(oracle), options_(options) {}

  QueryResult evaluate(const ParamVector& theta) override;
  std::int64_t queries() const override { return oracle_.count(); }
  std::optional<Image> render(const ParamVector& theta) const override;

 private:
  const Image& face_;
  const Sticker& sticker_;
  const FaceSurface& surface_;
  const ValidIndex& index_;
  CountingOracle& oracle_;
  CompositeOptions options_;
};

// Evaluator over a function of theta, with a theta-keyed cache. Identical
// theta always yields a bit-identical composite, so this cache is the
// parameter-space image of the image cache.
class ParamEvaluator : public Evaluator {
 public:
  ParamEvaluator(std::optional<std::int64_t> budget, bool cache)
      : counter_(budget), cache_enabled_(cache) {}

  QueryResult evaluate(const ParamVector& theta) final;
  std::int64_t queries() const final { return counter_.count(); }

 protected:
  virtual QueryResult score(const ParamVector& theta) = 0;

 private:
  QueryCounter counter_;
  bool cache_enabled_;
  std::mutex mutex_;
  std::map<std::pair<std::int64_t, std::uint64_t>, QueryResult> cache_;
};

// ParamEvaluator backed by a callback; the scripted oracle of the tests.
class ScriptedEvaluator final : public ParamEvaluator {
 public:
  using ScoreFn = std::function<QueryResult(const ParamVector&)>;
  ScriptedEvaluator(ScoreFn fn, std::optional<std::int64_t> budget = std::nullopt,
                    bool cache = true)
      : ParamEvaluator(budget, cache), fn_(std::move(fn)) {}

 protected:
  QueryResult score(const ParamVector& theta) override { return fn_(theta); }

 private:
  ScoreFn fn_;
};

// Counts every call that reaches the wrapped model; audits reported counts.
class TallyingOracle final : public ImageOracle {
 public:
  explicit TallyingOracle(ImageOracle& inner) : inner_(inner) {}

  QueryResult query(const Image& face) override {
    calls_.fetch_add(1);
    return inner_.query(face);
  }
  std::vector<std::string> labels() override { return inner_.labels(); }

  std::int64_t calls() const { return calls_.load(); }

 private:
  ImageOracle& inner_;
  std::atomic<std::int64_t> calls_{0};
};

}  // namespace advsticker

#endif  // ADVSTICKER_ORACLE_HPP

#include "advsticker/oracle.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>

#include "advsticker/errors.hpp"

namespace advsticker {

namespace {

const std::string kNoLabel;

}  // namespace

QueryResult::QueryResult(std::vector<LabelScore> scores) : scores_(std::move(scores)) {
  for (auto& s : scores_) {
    if (std::isnan(s.prob) || s.prob < -1e-9 || s.prob > 1.0 + 1e-9) {
      throw std::invalid_argument("QueryResult: probability out of [0, 1] for '" +
                                  s.label + "'");
    }
    s.prob = std::clamp(s.prob, 0.0, 1.0);
  }
  std::stable_sort(scores_.begin(), scores_.end(),
                   [](const LabelScore& a, const LabelScore& b) { return a.prob > b.prob; });
}

double QueryResult::prob(std::string_view label) const {
  for (const auto& s : scores_) {
    if (s.label == label) return s.prob;
  }
  return 0.0;
}

const std::string& QueryResult::top1() const {
  if (scores_.empty()) throw std::logic_error("QueryResult: no labels");
  return scores_[0].label;
}

const std::string& QueryResult::top2() const {
  return scores_.size() > 1 ? scores_[1].label : kNoLabel;
}

double QueryResult::top1_prob() const {
  return scores_.empty() ? 0.0 : scores_[0].prob;
}

double QueryResult::top2_prob() const {
  return scores_.size() > 1 ? scores_[1].prob : 0.0;
}

void QueryCounter::charge() {
  std::int64_t current = count_.load();
  do {
    if (budget_ && current >= *budget_) {
      throw BudgetExhausted("query budget of " + std::to_string(*budget_) +
                            " exhausted");
    }
  } while (!count_.compare_exchange_weak(current, current + 1));
}

ImageDigest digest(const Image& image) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  const std::int32_t shape[3] = {image.width(), image.height(), image.channels()};
  const auto data = image.data();
  ImageDigest out{};
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), shape, sizeof(shape)) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size_bytes()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), nullptr) != 1) {
    throw std::runtime_error("digest: SHA-256 failed");
  }
  return out;
}

std::size_t DigestHash::operator()(const ImageDigest& d) const noexcept {
  std::size_t h = 0;
  std::memcpy(&h, d.data(), sizeof(h));
  return h;
}

QueryResult CountingOracle::query(const Image& face) {
  if (!cache_enabled_) {
    counter_.charge();
    return inner_.query(face);
  }
  const ImageDigest key = digest(face);
  {
    std::shared_lock lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  counter_.charge();
  QueryResult result = inner_.query(face);
  std::unique_lock lock(cache_mutex_);
  cache_.emplace(key, result);
  return result;
}

QueryResult ImageEvaluator::evaluate(const ParamVector& theta) {
  return oracle_.query(*render(theta));
}

std::optional<Image> ImageEvaluator::render(const ParamVector& theta) const {
  const CompositeParams cp{index_.coord(theta.position_index), theta.angle};
  return composite(face_, sticker_, surface_, cp, options_);
}

QueryResult ParamEvaluator::evaluate(const ParamVector& theta) {
  const auto key = std::make_pair(theta.position_index,
                                  std::bit_cast<std::uint64_t>(theta.angle));
  if (cache_enabled_) {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  counter_.charge();
  QueryResult result = score(theta);
  if (cache_enabled_) {
    std::lock_guard lock(mutex_);
    cache_.emplace(key, result);
  }
  return result;
}

}  // namespace advsticker

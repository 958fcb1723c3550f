#include "advsticker/remote_oracle.hpp"

#include <algorithm>

#include "advsticker/errors.hpp"
#include "advsticker/io.hpp"
#include "httplib.h"
#include "json.hpp"

namespace advsticker {

using nlohmann::json;

std::string make_score_request(const Image& face, int top_k) {
  return json{{"image", base64_encode(encode_png(face))}, {"top_k", top_k}}.dump();
}

QueryResult parse_score_response(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw RemoteError(std::string("score response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("scores") || !doc["scores"].is_array()) {
    throw RemoteError("score response lacks a \"scores\" array");
  }
  std::vector<LabelScore> scores;
  double previous = 1.0 + 1e-9;
  for (const auto& entry : doc["scores"]) {
    if (!entry.is_object() || !entry.contains("label") || !entry.contains("prob") ||
        !entry["label"].is_string() || !entry["prob"].is_number()) {
      throw RemoteError("score entry must be {\"label\": str, \"prob\": float}");
    }
    const double p = entry["prob"].get<double>();
    if (!(p >= 0.0 && p <= 1.0 + 1e-9)) throw RemoteError("score probability out of [0, 1]");
    if (p > previous) throw RemoteError("scores are not sorted in descending order");
    previous = p;
    scores.push_back({entry["label"].get<std::string>(), std::min(p, 1.0)});
  }
  if (scores.empty()) throw RemoteError("score response is empty");
  return QueryResult(std::move(scores));
}

std::vector<std::string> parse_labels_response(std::string_view body) {
  try {
    const json doc = json::parse(body);
    return doc.at("labels").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw RemoteError(std::string("bad labels response: ") + e.what());
  }
}

RemoteOracle::RemoteOracle(RemoteOptions options) : options_(std::move(options)) {
  if (options_.url.empty()) throw ConfigError("remote oracle: empty URL");
}

namespace {

template <typename Call>
std::string with_retry(const RemoteOptions& opt, const std::string& what, Call call) {
  std::string last_error;
  auto delay = opt.backoff;
  for (int attempt = 0; attempt <= opt.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    httplib::Client client(opt.url);
    client.set_connection_timeout(opt.timeout);
    client.set_read_timeout(opt.timeout);
    client.set_write_timeout(opt.timeout);
    httplib::Result res = call(client);
    if (!res) {
      last_error = what + ": " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return res->body;
    last_error = what + ": HTTP " + std::to_string(res->status);
    if (res->status < 500) break;
  }
  throw RemoteError(last_error);
}

}  // namespace

std::string RemoteOracle::post_with_retry(const std::string& path,
                                          const std::string& body) {
  return with_retry(options_, "POST " + path, [&](httplib::Client& c) {
    return c.Post(path, body, "application/json");
  });
}

std::string RemoteOracle::get_with_retry(const std::string& path) {
  return with_retry(options_, "GET " + path,
                    [&](httplib::Client& c) { return c.Get(path); });
}

std::vector<std::string> RemoteOracle::labels() {
  std::lock_guard lock(labels_mutex_);
  if (!labels_) labels_ = parse_labels_response(get_with_retry("/labels"));
  return *labels_;
}

int RemoteOracle::effective_top_k() {
  if (options_.top_k > 0) return options_.top_k;
  return static_cast<int>(labels().size());
}

QueryResult RemoteOracle::query(const Image& face) {
  const std::string body = make_score_request(face, effective_top_k());
  return parse_score_response(post_with_retry("/score", body));
}

OracleServer::OracleServer(ImageOracle& oracle)
    : oracle_(oracle), server_(std::make_unique<httplib::Server>()) {
  server_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });

  server_->Get("/labels", [this](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(query_mutex_);
    res.set_content(json{{"labels", oracle_.labels()}}.dump(), "application/json");
  });

  server_->Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
    Image face;
    int top_k = 0;
    try {
      const json doc = json::parse(req.body);
      face = decode_png(base64_decode(doc.at("image").get<std::string>()));
      top_k = doc.value("top_k", 0);
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    if (face.channels() == 4) {
      Image rgb(face.width(), face.height(), 3);
      for (int r = 0; r < face.height(); ++r) {
        for (int c = 0; c < face.width(); ++c) {
          for (int ch = 0; ch < 3; ++ch) rgb.at(r, c, ch) = face.at(r, c, ch);
        }
      }
      face = std::move(rgb);
    }
    QueryResult result;
    try {
      std::lock_guard lock(query_mutex_);
      result = oracle_.query(face);
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    json scores = json::array();
    const auto& all = result.scores();
    const std::size_t n = top_k > 0 ? std::min<std::size_t>(top_k, all.size()) : all.size();
    for (std::size_t i = 0; i < n; ++i) {
      scores.push_back({{"label", all[i].label}, {"prob", all[i].prob}});
    }
    res.set_content(json{{"scores", scores}}.dump(), "application/json");
  });
}

OracleServer::~OracleServer() { stop(); }

int OracleServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host)
                              : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw RemoteError("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

bool OracleServer::listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

void OracleServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace advsticker

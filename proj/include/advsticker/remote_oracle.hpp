#ifndef ADVSTICKER_REMOTE_ORACLE_HPP
#define ADVSTICKER_REMOTE_ORACLE_HPP

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "advsticker/oracle.hpp"

namespace httplib {
class Server;
}

namespace advsticker {

// Wire protocol:
//   POST /score  {"image": "<base64 PNG>", "top_k": K}
//             -> {"scores": [{"label": str, "prob": float}, ...]} descending
//   GET /labels -> {"labels": [str, ...]}
// Any non-200 status is a RemoteError on the client side.
std::string make_score_request(const Image& face, int top_k);
// Throws RemoteError on any schema violation.
QueryResult parse_score_response(std::string_view body);
std::vector<std::string> parse_labels_response(std::string_view body);

struct RemoteOptions {
  std::string url;       // e.g. http://127.0.0.1:8080
  int top_k = 0;         // 0 requests the whole gallery
  int retries = 3;       // extra attempts after the first failure
  std::chrono::milliseconds backoff{100};  // doubled per retry
  std::chrono::seconds timeout{10};
};

class RemoteOracle final : public ImageOracle {
 public:
  explicit RemoteOracle(RemoteOptions options);

  // Transport failures and 5xx responses are retried; 4xx and malformed
  // bodies fail at once.
  QueryResult query(const Image& face) override;
  std::vector<std::string> labels() override;

 private:
  std::string post_with_retry(const std::string& path, const std::string& body);
  std::string get_with_retry(const std::string& path);
  int effective_top_k();

  RemoteOptions options_;
  std::mutex labels_mutex_;
  std::optional<std::vector<std::string>> labels_;
};

// Serves an ImageOracle over the wire protocol, plus GET /health.
class OracleServer {
 public:
  explicit OracleServer(ImageOracle& oracle);
  ~OracleServer();
  OracleServer(const OracleServer&) = delete;
  OracleServer& operator=(const OracleServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port; the
  // bound port is returned.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop().
  bool listen(const std::string& host, int port);
  void stop();

 private:
  ImageOracle& oracle_;
  std::mutex query_mutex_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace advsticker

#endif  // ADVSTICKER_REMOTE_ORACLE_HPP

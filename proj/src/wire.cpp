/*
 * Copyright 2026 The InfoAttr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "infoattr/wire.hpp"

#include <fcntl.h>
#include <fmt/format.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

#include "infoattr/errors.hpp"
#include "infoattr/file_io.hpp"

namespace infoattr {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static const bool once = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd)
      : read_fd_(read_fd), write_fd_(write_fd) {}

  ~FdChannel() override { close_fds(); }

  void write_line(std::string_view line) override {
    std::string buf(line);
    buf.push_back('\n');
    std::size_t off = 0;
    while (off < buf.size()) {
      const ssize_t n = ::write(write_fd_, buf.data() + off, buf.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kProtocol,
             std::string("write to peer failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) override {
    const auto deadline = Clock::now() + timeout;
    for (;;) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - Clock::now());
      if (left.count() <= 0) {
        fail(ErrorCode::kProtocol,
             fmt::format("peer did not answer within {} ms", timeout.count()));
      }
      pollfd pfd{read_fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kProtocol,
             std::string("poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) continue;
      char chunk[65536];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        fail(ErrorCode::kProtocol,
             std::string("read from peer failed: ") + std::strerror(errno));
      }
      if (n == 0) fail(ErrorCode::kProtocol, "peer closed the connection");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  void close_fds() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    read_fd_ = write_fd_ = -1;
  }

 private:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

class SubprocessChannel final : public FdChannel {
 public:
  SubprocessChannel(int read_fd, int write_fd, pid_t pid)
      : FdChannel(read_fd, write_fd), pid_(pid) {}

  ~SubprocessChannel() override {
    close_fds();
    // Closing stdin asks the peer to exit; give it a moment before killing.
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

 private:
  pid_t pid_;
};

}  // namespace

std::unique_ptr<LineChannel> spawn_subprocess(const std::string& command) {
  ignore_sigpipe();
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) {
    fail(ErrorCode::kProtocol, "pipe failed");
  }
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    fail(ErrorCode::kProtocol, "pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) {
      ::close(fd);
    }
    fail(ErrorCode::kProtocol, "fork failed");
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(),
            static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<SubprocessChannel>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& address) {
  ignore_sigpipe();
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    fail(ErrorCode::kInvalidArgument,
         "tcp address must be host:port, got '" + address + "'");
  }
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &found);
      rc != 0) {
    fail(ErrorCode::kProtocol,
         "cannot resolve " + address + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = found; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC,
                  ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) fail(ErrorCode::kProtocol, "cannot connect to " + address);
  return std::make_unique<FdChannel>(fd, fd);
}

std::unique_ptr<LineChannel> open_transport(std::string_view spec) {
  if (spec.starts_with("exec:")) {
    return spawn_subprocess(std::string(spec.substr(5)));
  }
  if (spec.starts_with("tcp:")) return connect_tcp(std::string(spec.substr(4)));
  fail(ErrorCode::kInvalidArgument,
       "transport must be exec:<command> or tcp:<host:port>, got '" +
           std::string(spec) + "'");
}

WireClient::WireClient(std::unique_ptr<LineChannel> channel,
                       std::chrono::milliseconds timeout)
    : channel_(std::move(channel)), timeout_(timeout) {}

json WireClient::call(json request) {
  std::lock_guard lock(mutex_);
  const long long id = next_id_++;
  request["id"] = id;
  channel_->write_line(request.dump());
  const std::string line = channel_->read_line(timeout_);
  json response;
  try {
    response = json::parse(line);
  } catch (const json::exception&) {
    fail(ErrorCode::kProtocol,
         fmt::format("message {}: response is not valid JSON", id));
  }
  if (!response.is_object() || !response.contains("id") ||
      !response["id"].is_number_integer()) {
    fail(ErrorCode::kProtocol,
         fmt::format("message {}: response lacks an integer id", id));
  }
  if (response["id"].get<long long>() != id) {
    fail(ErrorCode::kProtocol,
         fmt::format("message {}: response carries id {}", id,
                     response["id"].get<long long>()));
  }
  if (response.contains("error")) {
    fail(ErrorCode::kProtocol,
         fmt::format("message {}: peer error: {}", id,
                     response["error"].is_string()
                         ? response["error"].get<std::string>()
                         : response["error"].dump()));
  }
  return response;
}

ExternalClassifier::ExternalClassifier(std::unique_ptr<LineChannel> channel,
                                       std::string id,
                                       std::chrono::milliseconds timeout)
    : client_(std::move(channel), timeout), id_(std::move(id)) {
  const json info = client_.call({{"op", "info"}});
  try {
    num_classes_ = info.at("num_classes").get<int>();
    shape_ = {info.at("height").get<int>(), info.at("width").get<int>(),
              info.at("channels").get<int>()};
    if (info.contains("labels")) {
      labels_ = info["labels"].get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocol,
         fmt::format("message {}: malformed info response: {}",
                     info["id"].get<long long>(), e.what()));
  }
  if (num_classes_ < 2) {
    fail(ErrorCode::kProtocol,
         fmt::format("message {}: num_classes must be >= 2, got {}",
                     info["id"].get<long long>(), num_classes_));
  }
  if (shape_.height < 1 || shape_.width < 1 ||
      (shape_.channels != 1 && shape_.channels != 3)) {
    fail(ErrorCode::kProtocol, fmt::format("message {}: invalid input shape",
                                           info["id"].get<long long>()));
  }
}

std::vector<Prediction> ExternalClassifier::predict_images(
    std::span<const Image> images) const {
  std::string payload;
  payload.reserve(images.size() * shape_.num_bytes());
  for (const Image& image : images) {
    const auto b = image.bytes();
    payload.append(reinterpret_cast<const char*>(b.data()), b.size());
  }
  const json response = client_.call(
      {{"op", "predict"},
       {"shape", {images.size(), shape_.height, shape_.width, shape_.channels}},
       {"data", base64_encode(payload)}});
  const long long id = response["id"].get<long long>();
  const auto& rows = response.contains("probs") ? response["probs"] : json();
  if (!rows.is_array() || rows.size() != images.size()) {
    fail(ErrorCode::kProtocol,
         fmt::format("message {}: expected {} probability rows", id,
                     images.size()));
  }
  std::vector<Prediction> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (!row.is_array() || static_cast<int>(row.size()) != num_classes_) {
      fail(ErrorCode::kProtocol,
           fmt::format("message {}: row {} must have {} entries", id, i,
                       num_classes_));
    }
    Eigen::VectorXd p(num_classes_);
    for (int c = 0; c < num_classes_; ++c) {
      if (!row[c].is_number()) {
        fail(ErrorCode::kProtocol,
             fmt::format("message {}: row {} has a non-numeric entry", id, i));
      }
      p[c] = row[c].get<double>();
    }
    const double sum = p.sum();
    if (!p.allFinite() || (p.array() < 0.0).any() ||
        std::abs(sum - 1.0) > kWireSumTolerance) {
      fail(ErrorCode::kProtocol,
           fmt::format("message {}: probability row {} is not normalized "
                       "(sum {})",
                       id, i, sum));
    }
    out.emplace_back(p / sum);
  }
  return out;
}

std::unique_ptr<Classifier> connect_external(
    std::string_view transport, std::chrono::milliseconds timeout) {
  return std::make_unique<ExternalClassifier>(open_transport(transport),
                                              std::string(transport), timeout);
}

}  // namespace infoattr

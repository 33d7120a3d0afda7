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

// Newline-delimited JSON transport shared by the external classifier and
// external sampler clients.
//
// Every request carries a strictly increasing integer "id"; the peer answers
// each request exactly once with the same id, or with {"id":..,"error":..}.
// Transports are a spawned subprocess (its stdin/stdout) or a TCP stream.

#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

#include "infoattr/classifier.hpp"

namespace infoattr {

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(std::string_view line) = 0;
  // Returns the next line without its terminator. Throws kProtocol on
  // timeout or end of stream.
  virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

// Runs `command` through /bin/sh and talks to its standard streams.
std::unique_ptr<LineChannel> spawn_subprocess(const std::string& command);
// `address` is host:port.
std::unique_ptr<LineChannel> connect_tcp(const std::string& address);
// "exec:<command>" or "tcp:<host:port>".
std::unique_ptr<LineChannel> open_transport(std::string_view spec);

inline constexpr std::chrono::milliseconds kDefaultRequestTimeout{30000};

class WireClient {
 public:
  explicit WireClient(
      std::unique_ptr<LineChannel> channel,
      std::chrono::milliseconds timeout = kDefaultRequestTimeout);

  // Assigns the next id, sends, and waits for the matching response. Calls are
  // serialized. Error responses and id mismatches throw kProtocol naming the
  // message id.
  nlohmann::json call(nlohmann::json request);

 private:
  std::mutex mutex_;
  std::unique_ptr<LineChannel> channel_;
  std::chrono::milliseconds timeout_;
  long long next_id_ = 1;
};

// Tolerance on the row sums returned by a peer; rows inside it are
// renormalized, rows outside it are a protocol error.
inline constexpr double kWireSumTolerance = 1e-4;

class ExternalClassifier final : public Classifier {
 public:
  // Performs the `info` handshake.
  ExternalClassifier(
      std::unique_ptr<LineChannel> channel, std::string id,
      std::chrono::milliseconds timeout = kDefaultRequestTimeout);

  int num_classes() const override { return num_classes_; }
  ImageShape input_shape() const override { return shape_; }
  std::string id() const override { return id_; }
  std::vector<Prediction> predict_images(
      std::span<const Image> images) const override;

  const std::vector<std::string>& labels() const { return labels_; }

 private:
  mutable WireClient client_;
  std::string id_;
  int num_classes_ = 0;
  ImageShape shape_;
  std::vector<std::string> labels_;
};

std::unique_ptr<Classifier> connect_external(
    std::string_view transport,
    std::chrono::milliseconds timeout = kDefaultRequestTimeout);

}  // namespace infoattr

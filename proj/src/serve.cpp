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

#include "infoattr/serve.hpp"

#include <istream>
#include <ostream>

#include "infoattr/errors.hpp"
#include "infoattr/file_io.hpp"

namespace infoattr {
namespace {

using json = nlohmann::json;

template <typename Handler>
json guarded(const std::string& line, Handler&& handler) {
  json request;
  try {
    request = json::parse(line);
  } catch (const json::exception& e) {
    return {{"id", -1},
            {"error", std::string("unparseable request: ") + e.what()}};
  }
  if (!request.is_object() || !request.contains("id") ||
      !request["id"].is_number_integer()) {
    return {{"id", -1}, {"error", "request lacks an integer id"}};
  }
  const auto id = request["id"].get<long long>();
  try {
    json response = handler(request);
    response["id"] = id;
    return response;
  } catch (const std::exception& e) {
    return {{"id", id}, {"error", e.what()}};
  }
}

std::string op_of(const json& request) {
  if (!request.contains("op") || !request["op"].is_string()) {
    fail(ErrorCode::kProtocol, "request lacks an op");
  }
  return request["op"].get<std::string>();
}

template <typename Handle>
void serve_loop(std::istream& in, std::ostream& out, Handle&& handle) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << handle(line).dump() << '\n';
    out.flush();
  }
}

}  // namespace

json handle_classifier_request(const Classifier& classifier,
                               const std::string& line) {
  return guarded(line, [&](const json& request) -> json {
    const std::string op = op_of(request);
    const ImageShape s = classifier.input_shape();
    if (op == "info") {
      return {{"num_classes", classifier.num_classes()},
              {"height", s.height},
              {"width", s.width},
              {"channels", s.channels}};
    }
    if (op != "predict") fail(ErrorCode::kProtocol, "unknown op '" + op + "'");
    const auto shape = request.at("shape").get<std::vector<long long>>();
    if (shape.size() != 4 || shape[0] < 0 || shape[1] != s.height ||
        shape[2] != s.width || shape[3] != s.channels) {
      fail(ErrorCode::kProtocol, "shape does not match the model input");
    }
    const std::string raw =
        base64_decode(request.at("data").get<std::string>());
    const std::size_t each = s.num_bytes();
    if (raw.size() != each * static_cast<std::size_t>(shape[0])) {
      fail(ErrorCode::kProtocol, "data length does not match shape");
    }
    std::vector<Image> images;
    images.reserve(shape[0]);
    for (long long b = 0; b < shape[0]; ++b) {
      images.emplace_back(
          s.height, s.width, s.channels,
          std::vector<std::uint8_t>(raw.begin() + b * each,
                                    raw.begin() + (b + 1) * each));
    }
    json probs = json::array();
    for (const Prediction& p : predict_batch(classifier, images)) {
      probs.push_back(std::vector<double>(p.probs().begin(), p.probs().end()));
    }
    return {{"probs", std::move(probs)}};
  });
}

json handle_sampler_request(const Sampler& sampler, const std::string& line) {
  return guarded(line, [&](const json& request) -> json {
    const std::string op = op_of(request);
    const int k = sampler.patch_size();
    const int c = sampler.channels();
    if (op == "info") {
      return {{"K", k}, {"channels", c}, {"enumerable", false}};
    }
    if (op != "sample") fail(ErrorCode::kProtocol, "unknown op '" + op + "'");
    const auto shape = request.at("context_shape").get<std::vector<int>>();
    if (shape != std::vector<int>{3 * k, 3 * k, c}) {
      fail(ErrorCode::kProtocol, "context_shape does not match the sampler");
    }
    const std::string raw =
        base64_decode(request.at("context").get<std::string>());
    const ContextWindow context(
        k, c, std::vector<std::uint8_t>(raw.begin(), raw.end()));
    const auto patches = sample(sampler, context, request.at("n").get<int>(),
                                request.at("seed").get<std::uint64_t>());
    std::string payload;
    for (const auto& p : patches) payload.append(p.begin(), p.end());
    return {{"patches", base64_encode(payload)}};
  });
}

void serve_classifier(const Classifier& classifier, std::istream& in,
                      std::ostream& out) {
  serve_loop(in, out, [&](const std::string& line) {
    return handle_classifier_request(classifier, line);
  });
}

void serve_sampler(const Sampler& sampler, std::istream& in,
                   std::ostream& out) {
  serve_loop(in, out, [&](const std::string& line) {
    return handle_sampler_request(sampler, line);
  });
}

}  // namespace infoattr

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

#include <arpa/inet.h>
#include <gtest/gtest.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <string>
#include <thread>

#include "infoattr/classifier.hpp"
#include "infoattr/errors.hpp"
#include "infoattr/file_io.hpp"
#include "infoattr/sampler.hpp"
#include "infoattr/serve.hpp"
#include "test_util.hpp"

namespace infoattr {
namespace {

using namespace std::chrono_literals;
using testing::random_image;

std::string peer(const std::string& args) {
  return std::string("exec:") + INFOATTR_FAKE_PEER + " " + args;
}

LinearSoftmaxModel sample_model(ImageShape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.05);
  Eigen::MatrixXd w(3, static_cast<Eigen::Index>(shape.num_bytes()));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = n(rng);
  return LinearSoftmaxModel(shape, w, Eigen::Vector3d(0.1, -0.2, 0.0));
}

// Expects a protocol error whose message contains `needle`.
void expect_protocol_error(const std::function<void()>& f,
                           const std::string& needle) {
  try {
    f();
    ADD_FAILURE() << "expected a protocol error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocol) << e.what();
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos)
        << e.what();
  }
}

TEST(WireTest, SubprocessLinearModelMatchesInProcess) {
  const auto dir = testing::scratch_dir();
  const ImageShape shape{6, 5, 3};
  const auto model = sample_model(shape, 1);
  save_linear_model(model, dir / "m.json");
  const auto remote =
      connect_external(peer("linear " + (dir / "m.json").string()));
  EXPECT_EQ(remote->num_classes(), 3);
  EXPECT_EQ(remote->input_shape(), shape);
  std::vector<Image> batch;
  for (int i = 0; i < 100; ++i) batch.push_back(random_image(6, 5, 3, i));
  const auto got = predict_batch(*remote, batch);
  ASSERT_EQ(got.size(), batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Prediction want = predict(model, batch[i]);
    EXPECT_LT((got[i].probs() - want.probs()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(WireTest, ConcurrentCallersAreSerialized) {
  const auto dir = testing::scratch_dir();
  const ImageShape shape{4, 4, 1};
  const auto model = sample_model(shape, 2);
  save_linear_model(model, dir / "m.json");
  const auto remote =
      connect_external(peer("linear " + (dir / "m.json").string()));
  std::vector<std::jthread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 10; ++i) {
        const Image img = random_image(4, 4, 1, t * 100 + i);
        const auto p = predict(*remote, img);
        if ((p.probs() - predict(model, img).probs()).cwiseAbs().maxCoeff() >
            1e-6) {
          ++mismatches;
        }
      }
    });
  }
  threads.clear();
  EXPECT_EQ(mismatches.load(), 0);
}

TEST(WireTest, RowsOffByMoreThanToleranceAreRejected) {
  const auto remote = connect_external(peer("bad-sum"));
  expect_protocol_error([&] { predict(*remote, Image(4, 4, 1)); }, "message 2");
}

TEST(WireTest, RowsWithinToleranceAreRenormalized) {
  const auto remote = connect_external(peer("near-sum"));
  const Prediction p = predict(*remote, Image(4, 4, 1));
  EXPECT_NEAR(p.probs().sum(), 1.0, 1e-12);
}

TEST(WireTest, SingleClassInfoIsRejected) {
  expect_protocol_error([] { connect_external(peer("one-class")); },
                        "message 1");
}

TEST(WireTest, SilentPeerTimesOut) {
  const auto start = std::chrono::steady_clock::now();
  expect_protocol_error([] { connect_external(peer("silent"), 300ms); },
                        "did not answer");
  EXPECT_LT(std::chrono::steady_clock::now() - start, 5s);
}

TEST(WireTest, MismatchedIdIsRejected) {
  expect_protocol_error(
      [] {
        const auto r = connect_external(peer("wrong-id"));
        predict(*r, Image(4, 4, 1));
      },
      "id");
}

TEST(WireTest, ErrorResponseNamesMessage) {
  const auto remote = connect_external(peer("error"));
  expect_protocol_error([&] { predict(*remote, Image(4, 4, 1)); },
                        "model exploded");
}

TEST(WireTest, GarbageResponseIsProtocolError) {
  const auto remote = connect_external(peer("garbage"));
  expect_protocol_error([&] { predict(*remote, Image(4, 4, 1)); }, "");
}

TEST(WireTest, ExitedPeerIsProtocolError) {
  expect_protocol_error([] { connect_external("exec:true"); }, "");
}

TEST(WireTest, RejectsUnknownTransport) {
  EXPECT_THROW(open_transport("udp:1.2.3.4:5"), Error);
}

TEST(WireTest, ExternalSamplerOverSubprocess) {
  const ExternalSampler s(open_transport(peer("sampler 4 3 7")), "fake");
  EXPECT_EQ(s.patch_size(), 4);
  EXPECT_EQ(s.channels(), 3);
  const Image img = random_image(12, 12, 3, 1);
  const auto patches = sample(s, extract_context(img, {4, 4}, 4), 5, 9);
  ASSERT_EQ(patches.size(), 5u);
  for (const auto& p : patches) EXPECT_EQ(p, PatchBytes(48, 7));
}

TEST(WireTest, TcpTransport) {
  const ImageShape shape{4, 4, 3};
  const auto model = sample_model(shape, 3);
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(listener, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ASSERT_EQ(::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr),
            0);
  ASSERT_EQ(::listen(listener, 1), 0);
  socklen_t len = sizeof addr;
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);

  std::jthread server([&] {
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) return;
    std::string buffer;
    char chunk[4096];
    for (;;) {
      const ssize_t n = ::read(fd, chunk, sizeof chunk);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      for (auto pos = buffer.find('\n'); pos != std::string::npos;
           pos = buffer.find('\n')) {
        const std::string reply =
            handle_classifier_request(model, buffer.substr(0, pos)).dump() +
            "\n";
        buffer.erase(0, pos + 1);
        if (::write(fd, reply.data(), reply.size()) < 0) break;
      }
    }
    ::close(fd);
  });

  {
    const auto remote =
        connect_external("tcp:127.0.0.1:" + std::to_string(port));
    const Image img = random_image(4, 4, 3, 4);
    EXPECT_LT((predict(*remote, img).probs() - predict(model, img).probs())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-6);
  }
  server.join();
  ::close(listener);
}

TEST(ServeTest, MalformedRequestsGetErrorResponses) {
  const LinearSoftmaxModel model = sample_model({2, 2, 1}, 4);
  auto r = handle_classifier_request(model, "{not json");
  EXPECT_EQ(r["id"], -1);
  EXPECT_TRUE(r.contains("error"));
  r = handle_classifier_request(model, R"({"op":"info"})");
  EXPECT_EQ(r["id"], -1);
  r = handle_classifier_request(model, R"({"id":5,"op":"dance"})");
  EXPECT_EQ(r["id"], 5);
  EXPECT_TRUE(r.contains("error"));
  r = handle_classifier_request(
      model, R"({"id":6,"op":"predict","shape":[1,2,2,1],"data":"AAA="})");
  EXPECT_EQ(r["id"], 6);
  EXPECT_TRUE(r.contains("error"));
  r = handle_classifier_request(model, R"({"id":7,"op":"info"})");
  EXPECT_EQ(r["num_classes"], 3);
  EXPECT_EQ(r["channels"], 1);
}

TEST(ServeTest, SamplerRequestRoundTrip) {
  const ReferenceSampler ref(2, 1, 99);
  auto r = handle_sampler_request(ref, R"({"id":1,"op":"info"})");
  EXPECT_EQ(r["K"], 2);
  EXPECT_EQ(r["enumerable"], false);
  const std::string ctx(36, '\0');
  r = handle_sampler_request(ref,
                             nlohmann::json({{"id", 2},
                                             {"op", "sample"},
                                             {"n", 2},
                                             {"seed", 0},
                                             {"context_shape", {6, 6, 1}},
                                             {"context", base64_encode(ctx)},
                                             {"mask_origin", {2, 2}}})
                                 .dump());
  EXPECT_EQ(base64_decode(r["patches"].get<std::string>()),
            std::string(8, 'c'));
}

}  // namespace
}  // namespace infoattr

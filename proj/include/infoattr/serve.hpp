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

// Server side of the wire protocol: answers requests read from a stream.
// Used by `infoattr serve` and by protocol tests.

#pragma once

#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>

#include "infoattr/classifier.hpp"
#include "infoattr/sampler.hpp"

namespace infoattr {

// Handles one request line. Unparseable input yields an error response with
// id -1; failures never escape.
nlohmann::json handle_classifier_request(const Classifier& classifier,
                                         const std::string& line);
nlohmann::json handle_sampler_request(const Sampler& sampler,
                                      const std::string& line);

// Answers one response line per request line until end of input.
void serve_classifier(const Classifier& classifier, std::istream& in,
                      std::ostream& out);
void serve_sampler(const Sampler& sampler, std::istream& in, std::ostream& out);

}  // namespace infoattr

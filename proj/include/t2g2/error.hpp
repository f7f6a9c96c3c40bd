// Copyright 2026 The T2G2 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace t2g2 {

/// Broad failure classes. The CLI maps these onto exit codes.
enum class ErrorClass { kUsage, kData, kRewriter };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorClass::kUsage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorClass::kData, what) {}
};

/// Malformed input file. line is 0 when the position is unknown.
class ParseError : public DataError {
 public:
  ParseError(std::string file, std::size_t line, const std::string& detail)
      : DataError(format(file, line, detail)), file_(std::move(file)), line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& file, std::size_t line, const std::string& detail) {
    std::string out = file.empty() ? std::string("<input>") : file;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + detail;
  }

  std::string file_;
  std::size_t line_;
};

class DuplicateService : public DataError {
 public:
  explicit DuplicateService(const std::string& service)
      : DataError("duplicate service: " + service), service_(service) {}
  const std::string& service() const noexcept { return service_; }

 private:
  std::string service_;
};

class UnknownService : public DataError {
 public:
  explicit UnknownService(const std::string& service)
      : DataError("unknown service: " + service), service_(service) {}
  const std::string& service() const noexcept { return service_; }

 private:
  std::string service_;
};

class UnknownSlot : public DataError {
 public:
  UnknownSlot(const std::string& service, const std::string& slot)
      : DataError("unknown slot '" + slot + "' for service " + service), service_(service), slot_(slot) {}
  const std::string& service() const noexcept { return service_; }
  const std::string& slot() const noexcept { return slot_; }

 private:
  std::string service_;
  std::string slot_;
};

class MissingDescription : public DataError {
 public:
  explicit MissingDescription(const std::string& slot)
      : DataError("slot has no description: " + slot), slot_(slot) {}
  const std::string& slot() const noexcept { return slot_; }

 private:
  std::string slot_;
};

class MissingTemplate : public DataError {
  static std::string join_keys(const std::vector<std::string>& all) {
    std::string out;
    for (const auto& k : all) out += (out.empty() ? "" : ", ") + k;
    return out;
  }

 public:
  MissingTemplate(const std::string& service, const std::string& key)
      : DataError("missing template for " + service + " " + key), service_(service), key_(key) {}
  /// First missing key plus the full list, one "service key" entry each.
  MissingTemplate(const std::string& service, const std::string& key, const std::vector<std::string>& all)
      : DataError(std::to_string(all.size()) + " missing template(s): " + join_keys(all)), service_(service), key_(key) {}
  const std::string& service() const noexcept { return service_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::string service_;
  std::string key_;
};

class PlaceholderMismatch : public DataError {
 public:
  using DataError::DataError;
};

/// No k-subset of a domain's dialogues covers all of its acts and slots.
class CoverageInfeasible : public DataError {
 public:
  CoverageInfeasible(const std::string& domain, std::vector<std::string> uncovered)
      : DataError(format(domain, uncovered)), domain_(domain), uncovered_(std::move(uncovered)) {}
  const std::string& domain() const noexcept { return domain_; }
  const std::vector<std::string>& uncovered() const noexcept { return uncovered_; }

 private:
  static std::string format(const std::string& domain, const std::vector<std::string>& items) {
    std::string out = "coverage infeasible for domain " + domain + "; uncovered:";
    for (const auto& item : items) out += " " + item;
    return out;
  }

  std::string domain_;
  std::vector<std::string> uncovered_;
};

class LengthMismatch : public DataError {
 public:
  LengthMismatch(std::size_t lhs, std::size_t rhs)
      : DataError("length mismatch: " + std::to_string(lhs) + " vs " + std::to_string(rhs)) {}
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(ErrorClass::kRewriter, what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(ErrorClass::kRewriter, what) {}
};

}  // namespace t2g2

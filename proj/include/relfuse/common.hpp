#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The relfuse Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace relfuse {

using TokenId    = std::int32_t;
using RelationId = std::int32_t;

/// Failure categories. Each maps onto one process exit code at the CLI.
enum class ErrorKind
{
  usage,       ///< bad argument or configuration value
  data,        ///< malformed, missing or inconsistent input data
  numerical,   ///< non-finite values, divergence, degenerate vectors
};

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, std::string const &message)
    : std::runtime_error(message)
    , kind_(kind)
  {}

  ErrorKind kind() const noexcept
  {
    return kind_;
  }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, std::string const &message)
{
  throw Error(kind, message);
}

enum class Source : std::uint8_t
{
  structured,
  co_occurrence,
};

/// Position of an element within a (subject, relation, object) triple.
enum class Slot : std::uint8_t
{
  S,
  R,
  O,
};

struct Triple
{
  TokenId    s{0};
  RelationId r{0};
  TokenId    o{0};
  Source     source{Source::structured};

  friend bool operator==(Triple const &, Triple const &) = default;
};

std::string_view to_string(Source source);
Source           source_from_string(std::string_view text);
std::string_view to_string(Slot slot);
Slot             slot_from_string(std::string_view text);

/// 64-bit FNV-1a, used for vocabulary and input-file fingerprints.
class Fnv1a
{
public:
  void update(std::string_view bytes) noexcept
  {
    for (unsigned char c : bytes)
    {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
  }

  std::uint64_t value() const noexcept
  {
    return state_;
  }

  std::string hex() const;

private:
  std::uint64_t state_{0xcbf29ce484222325ULL};
};

std::string hash_file(std::string const &path);

}  // namespace relfuse

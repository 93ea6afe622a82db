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

#include "relfuse/common.hpp"

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <unistd.h>

namespace testing {

/// Scratch directory removed on scope exit.
class TempDir
{
public:
  TempDir()
  {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("relfuse-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(TempDir const &)            = delete;
  TempDir &operator=(TempDir const &) = delete;

  std::string file(std::string const &name) const
  {
    return (path_ / name).string();
  }
  std::string str() const
  {
    return path_.string();
  }

private:
  std::filesystem::path path_;
};

inline void write_file(std::string const &path, std::string const &content)
{
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(std::string const &path)
{
  std::ifstream      in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs `fn` and returns the kind and message of the relfuse::Error it throws.
inline std::pair<relfuse::ErrorKind, std::string> capture_error(std::function<void()> const &fn)
{
  try
  {
    fn();
  }
  catch (relfuse::Error const &e)
  {
    return {e.kind(), e.what()};
  }
  FAIL("expected a relfuse::Error");
  return {relfuse::ErrorKind::usage, {}};
}

inline bool contains(std::string const &haystack, std::string const &needle)
{
  return haystack.find(needle) != std::string::npos;
}

}  // namespace testing

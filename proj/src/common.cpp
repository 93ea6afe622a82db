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

#include <cstdio>
#include <fstream>
#include <vector>

namespace relfuse {

std::string_view to_string(Source source)
{
  return source == Source::structured ? "structured" : "co_occurrence";
}

Source source_from_string(std::string_view text)
{
  if (text == "structured")
  {
    return Source::structured;
  }
  if (text == "co_occurrence")
  {
    return Source::co_occurrence;
  }
  fail(ErrorKind::data, "unknown source '" + std::string(text) + "'");
}

std::string_view to_string(Slot slot)
{
  switch (slot)
  {
  case Slot::S:
    return "S";
  case Slot::R:
    return "R";
  case Slot::O:
    return "O";
  }
  return "?";
}

Slot slot_from_string(std::string_view text)
{
  if (text == "S" || text == "s")
  {
    return Slot::S;
  }
  if (text == "R" || text == "r")
  {
    return Slot::R;
  }
  if (text == "O" || text == "o")
  {
    return Slot::O;
  }
  fail(ErrorKind::usage, "unknown slot '" + std::string(text) + "' (expected S, R or O)");
}

std::string Fnv1a::hex() const
{
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

std::string hash_file(std::string const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    fail(ErrorKind::data, "cannot open '" + path + "'");
  }
  Fnv1a             h;
  std::vector<char> buf(1 << 16);
  while (in)
  {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return h.hex();
}

}  // namespace relfuse

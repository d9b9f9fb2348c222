#include "dashgs/checkpoint.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "dashgs/error.hpp"

namespace dashgs::splat {

namespace {
constexpr const char* kHeader = "index,px,py,ls0,ls1,rot,op,r,g,b";
}

void write_checkpoint(std::ostream& out, const SplatModel& model) {
  out << kHeader << '\n';
  char buf[32];
  for (std::size_t i = 0; i < model.size(); ++i) {
    out << i;
    for (int k = 0; k < kParamCount; ++k) {
      std::snprintf(buf, sizeof buf, ",%.9g", param(model.primitives[i], k));
      out << buf;
    }
    out << '\n';
  }
}

std::string checkpoint_text(const SplatModel& model) {
  std::ostringstream out;
  write_checkpoint(out, model);
  return out.str();
}

SplatModel read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw InputError("checkpoint header missing");
  SplatModel model;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    if (!std::getline(fields, cell, ',') || std::stoull(cell) != row) {
      throw InputError("checkpoint row " + std::to_string(row) + " out of sequence");
    }
    Gaussian2D g;
    for (int k = 0; k < kParamCount; ++k) {
      if (!std::getline(fields, cell, ',')) throw InputError("checkpoint row " + std::to_string(row) + " is short");
      try {
        param(g, k) = std::stod(cell);
      } catch (const std::exception&) {
        throw InputError("checkpoint row " + std::to_string(row) + " has a bad value");
      }
    }
    model.primitives.push_back(g);
    ++row;
  }
  return model;
}

}  // namespace dashgs::splat

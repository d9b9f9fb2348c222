#pragma once

#include <iosfwd>
#include <string>

#include "dashgs/splat2d.hpp"

namespace dashgs::splat {

/// Text table `index,px,py,ls0,ls1,rot,op,r,g,b` of raw parameters, 9
/// significant digits, LF line endings.
void write_checkpoint(std::ostream& out, const SplatModel& model);
std::string checkpoint_text(const SplatModel& model);

/// Throws InputError on a malformed table.
SplatModel read_checkpoint(std::istream& in);

}  // namespace dashgs::splat

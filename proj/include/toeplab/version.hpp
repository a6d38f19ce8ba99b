#pragma once

namespace toeplab {

inline constexpr const char* kLibraryVersion = "toeplab 0.1.0";

}

#pragma once

#include <string>
#include <string_view>

namespace msq {

enum class Verdict { Pass, Fail, Error };

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        case Verdict::Error: return "ERROR";
    }
    return "ERROR";
}

}  // namespace msq

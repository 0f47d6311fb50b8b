#pragma once

#include <vector>

#include "symmflow/errors.hpp"

namespace symmflow {

/// Uniform sampling grid; defaults match the comparison protocol.
struct GridSpec {
    double start = 0.0;
    double stop = 10.0;
    double step = 0.01;

    std::vector<double> points() const {
        if (step <= 0.0 || stop < start) throw ConfigError("bad grid specification");
        std::vector<double> out;
        long n = static_cast<long>((stop - start) / step + 0.5);
        out.reserve(static_cast<std::size_t>(n) + 1);
        for (long i = 0; i <= n; ++i) {
            double x = start + step * static_cast<double>(i);
            if (x > stop + step * 0.5) break;
            out.push_back(x);
        }
        return out;
    }
};

}  // namespace symmflow

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <unistd.h>
#include <vector>

#include "hv/tape.hpp"

namespace hvtest {

using hv::Matrix;
using hv::Rng;

/// Builds a scalar graph from leaf values; leaf order is fixed.
using GraphBuilder =
    std::function<hv::ad::Var(hv::ad::Tape&, const std::vector<hv::ad::Var>&)>;

struct FdResult {
    double max_rel_err = 0.0;
    size_t coords_checked = 0;
};

/// Central-difference check of d(scalar)/d(leaf) for every coordinate of
/// every leaf. Relative error uses a 1e-6 floor so near-zero gradient
/// pairs compare on absolute terms.
inline FdResult fd_check(std::vector<Matrix> leaves, const GraphBuilder& build,
                         double step = 1e-6) {
    FdResult res;
    std::vector<double> analytic;
    {
        hv::ad::Tape tape;
        std::vector<hv::ad::Var> vars;
        for (const Matrix& m : leaves) vars.push_back(tape.param(m));
        hv::ad::Var loss = build(tape, vars);
        tape.backward(loss);
        for (const auto& v : vars) {
            Matrix g = v.grad();
            analytic.insert(analytic.end(), g.a.begin(), g.a.end());
        }
    }
    auto eval = [&](const std::vector<Matrix>& ls) {
        hv::ad::Tape tape;
        std::vector<hv::ad::Var> vars;
        for (const Matrix& m : ls) vars.push_back(tape.input(m));
        return build(tape, vars).value().a[0];
    };
    size_t flat = 0;
    for (size_t li = 0; li < leaves.size(); ++li) {
        for (size_t j = 0; j < leaves[li].size(); ++j, ++flat) {
            const double orig = leaves[li].a[j];
            leaves[li].a[j] = orig + step;
            const double fp = eval(leaves);
            leaves[li].a[j] = orig - step;
            const double fm = eval(leaves);
            leaves[li].a[j] = orig;
            const double fd = (fp - fm) / (2.0 * step);
            const double ad = analytic[flat];
            const double denom = std::max({std::fabs(fd), std::fabs(ad), 1e-6});
            res.max_rel_err = std::max(res.max_rel_err, std::fabs(fd - ad) / denom);
            ++res.coords_checked;
        }
    }
    return res;
}

inline Matrix random_matrix(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    return Matrix::uniform(r, c, rng, lo, hi);
}

/// Unique scratch directory under the system temp root.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        namespace fs = std::filesystem;
        path_ = fs::temp_directory_path() / ("hv_test_" + tag + "_" +
                                             std::to_string(::getpid()) + "_" +
                                             std::to_string(counter_++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    std::filesystem::path path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
    static inline int counter_ = 0;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace hvtest

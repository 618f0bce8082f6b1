#include "eepn/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace eepn {

namespace {

struct PlanDeleter {
    void operator()(fftw_plan_s* plan) const noexcept { fftw_destroy_plan(plan); }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

class PlanCache {
public:
    fftw_plan get(std::size_t size, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(size, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second.get();
        // Planning with ESTIMATE does not touch the arrays' contents, but the
        // arrays must exist.
        auto* scratch = fftw_alloc_complex(size);
        PlanHandle plan(fftw_plan_dft_1d(static_cast<int>(size), scratch, scratch, sign,
                                         FFTW_ESTIMATE | FFTW_UNALIGNED));
        fftw_free(scratch);
        fftw_plan raw = plan.get();
        plans_.emplace(key, std::move(plan));
        return raw;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, PlanHandle> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

void execute(std::span<std::complex<double>> data, int sign) {
    if (data.empty()) return;
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(cache().get(data.size(), sign), ptr, ptr);
}

}  // namespace

void Fft::forward(std::span<std::complex<double>> data) { execute(data, FFTW_FORWARD); }

void Fft::inverse(std::span<std::complex<double>> data) {
    execute(data, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= scale;
}

}  // namespace eepn

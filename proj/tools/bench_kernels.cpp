// Times the OpenMP kernels against the serial reference: matrix product,
// model forward, batch gradient, and the Gaussian label filter.
// Usage: eev_bench [max_threads]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "eev/losses.hpp"
#include "eev/matrix.hpp"
#include "eev/model.hpp"
#include "eev/rng.hpp"
#include "eev/signal.hpp"
#include "eev/threading.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double checksum = 0.0;  // defeats dead-code elimination

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = Clock::now();
        checksum += fn();
        const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
        if (dt < best) best = dt;
    }
    return best;
}

eev::Matrix rand_mat(std::size_t r, std::size_t c, eev::Rng& rng) {
    eev::Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

void report(const char* name, double serial, double parallel, int threads) {
    std::printf("%-24s serial %8.3f ms   %d threads %8.3f ms   speedup %.2fx\n", name,
                serial * 1e3, threads, parallel * 1e3, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
    const int max_threads = argc > 1 ? std::atoi(argv[1]) : 4;
    eev::Rng rng(42);

    // mat_mul: reference loop vs OpenMP kernel
    const eev::Matrix a = rand_mat(256, 1536, rng);
    const eev::Matrix b = rand_mat(1536, 64, rng);
    eev::set_threads(1);
    const double mm_ref =
        time_best_of(5, [&] { return eev::reference::mat_mul(a, b).at(0, 0); });
    eev::set_threads(max_threads);
    const double mm_par = time_best_of(5, [&] { return eev::mat_mul(a, b).at(0, 0); });
    report("mat_mul 256x1536x64", mm_ref, mm_par, max_threads);

    // model forward over a 60 s window at 6 Hz
    eev::ModelConfig config;
    config.visual_dim = 256;
    config.audio_dim = 64;
    config.hidden_dim = 64;
    config.init_seed = 7;
    const eev::ModelParams params = eev::init_params(config);
    const eev::Matrix visual = rand_mat(360, config.visual_dim, rng);
    const eev::Matrix audio = rand_mat(360, config.audio_dim, rng);
    eev::set_threads(1);
    const double fwd_ref =
        time_best_of(5, [&] { return eev::model_forward(visual, audio, params).at(0, 0); });
    eev::set_threads(max_threads);
    const double fwd_par =
        time_best_of(5, [&] { return eev::model_forward(visual, audio, params).at(0, 0); });
    report("model_forward T=360", fwd_ref, fwd_par, max_threads);

    // forward + loss + backward for one clip
    const eev::Matrix label = rand_mat(360, 15, rng);
    auto grad_once = [&] {
        eev::ModelCache cache;
        const eev::Matrix pred = eev::model_forward(visual, audio, params, cache);
        eev::Matrix target = label;
        for (std::size_t i = 0; i < target.size(); ++i) {
            target.data()[i] = 0.5 + 0.4 * target.data()[i];
        }
        const eev::LossReport loss = eev::l1_loss(pred, target);
        return eev::model_backward(cache, params, loss.d_pred).grads.head.proj_b.at(0, 0);
    };
    eev::set_threads(1);
    const double bwd_ref = time_best_of(3, grad_once);
    eev::set_threads(max_threads);
    const double bwd_par = time_best_of(3, grad_once);
    report("clip gradient T=360", bwd_ref, bwd_par, max_threads);

    // Gaussian filter on a long 15-channel track
    eev::SampledTrack track{6.0, 0.0, rand_mat(20000, 15, rng)};
    eev::set_threads(1);
    const double gf_ref =
        time_best_of(3, [&] { return eev::gaussian_filter(track, 4.0).values.at(0, 0); });
    eev::set_threads(max_threads);
    const double gf_par =
        time_best_of(3, [&] { return eev::gaussian_filter(track, 4.0).values.at(0, 0); });
    report("gaussian_filter 20k", gf_ref, gf_par, max_threads);

    std::fprintf(stderr, "checksum %g\n", checksum);
    return 0;
}

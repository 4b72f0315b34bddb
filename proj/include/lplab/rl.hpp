// Minimal episodic-environment interface shared by the environments and the
// learners.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lplab::rl {

struct StepOutcome {
    std::vector<double> observation;
    double reward = 0.0;
    bool done = false;
};

class EpisodicEnv {
public:
    virtual ~EpisodicEnv() = default;

    // Starts an episode. Training environments use the seed to pick a start;
    // evaluation environments may ignore it.
    virtual std::vector<double> reset(std::uint64_t episode_seed) = 0;
    virtual StepOutcome step(int action) = 0;
    virtual int action_count() const = 0;
    virtual std::size_t observation_size() const = 0;
};

}  // namespace lplab::rl

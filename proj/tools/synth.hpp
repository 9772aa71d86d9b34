#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ppuc/dataset.hpp"
#include "ppuc/system_model.hpp"

namespace ppuc::synth {

/// US federal holidays (observed dates) between first and last inclusive.
[[nodiscard]] std::vector<Date> federal_holidays(Date first, Date last);

/// Writes an hourly net-load/weather CSV for `system`: temperature, irradiance
/// and wind drive demand and renewable output, and bus loads are fixed shares
/// of the system net load.
void write_timeseries(const SystemModel& system, Date first, Date last, std::uint64_t seed,
                      const std::filesystem::path& path);

void write_holidays(Date first, Date last, const std::filesystem::path& path);

}  // namespace ppuc::synth

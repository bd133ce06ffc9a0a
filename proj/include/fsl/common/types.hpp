#pragma once

#include <cstdint>
#include <vector>

namespace fsl {

// Dense item index in [0, M). Row M of the embedding table is padding.
using ItemId = std::uint32_t;
using ItemList = std::vector<ItemId>;

} // namespace fsl

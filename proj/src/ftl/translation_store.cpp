#include "ftl/translation_store.hpp"

namespace ssdsim::ftl {

using nand::FlashOpKind;
using nand::FlashOperation;

TranslationStore::TranslationStore(BlockManager& bm, std::uint32_t total_dlpns)
    : bm_(bm) {
  const auto& g = bm_.nand().geometry();
  entries_per_page_ = g.page_data_bytes / 4;  // 4-byte DPPN entries
  std::uint32_t pages = (total_dlpns + entries_per_page_ - 1) / entries_per_page_;
  gtd_.assign(pages, kUnmapped);
}

void TranslationStore::format() {
  auto empty = std::make_shared<const std::vector<Dppn>>(
      std::vector<Dppn>(entries_per_page_, kUnmapped));
  for (Tvpn tvpn = 0; tvpn < gtd_.size(); ++tvpn)
    gtd_[tvpn] = bm_.bootstrap_translation_page(tvpn, empty);
}

void TranslationStore::read_page(
    Tvpn tvpn, std::function<void(std::shared_ptr<const std::vector<Dppn>>)> on_data) {
  Tppn tppn = gtd_[tvpn];
  SSDSIM_CHECK_MSG(tppn != kUnmapped, "GTD hole at tvpn " << tvpn);
  const auto& g = bm_.nand().geometry();
  std::uint32_t block = tppn / g.pages_per_block;
  bm_.pin_block(block);
  reads_++;
  FlashOperation op;
  op.kind = FlashOpKind::ReadPage;
  op.targets = {g.address_of_ppn(tppn)};
  op.transfer_bytes = g.page_data_bytes;
  op.on_complete = [this, block, cb = std::move(on_data)](nand::FlashResult&& r) {
    bm_.unpin_block(block);
    SSDSIM_CHECK(r.pages.front().kind == nand::OobKind::Translation);
    SSDSIM_CHECK(r.pages.front().payload != nullptr);
    cb(std::static_pointer_cast<const std::vector<Dppn>>(r.pages.front().payload));
  };
  bm_.nand().submit(std::move(op));
}

void TranslationStore::write_page(Tvpn tvpn,
                                  std::shared_ptr<const std::vector<Dppn>> entries,
                                  std::function<void(Tppn)> on_durable) {
  SSDSIM_CHECK(entries && entries->size() == entries_per_page_);
  programs_++;
  bm_.program_translation(tvpn, entries, [this, tvpn,
                                          cb = std::move(on_durable)](Tppn fresh) {
    Tppn old = gtd_[tvpn];
    gtd_[tvpn] = fresh;
    if (old != kUnmapped) bm_.invalidate_translation(old);
    if (cb) cb(fresh);
  });
}

bool TranslationStore::relocate(Tvpn tvpn, Tppn new_tppn, Tppn old_tppn) {
  if (gtd_[tvpn] != old_tppn) return false;
  gtd_[tvpn] = new_tppn;
  return true;
}

std::vector<Dppn> TranslationStore::read_page_now(Tvpn tvpn) const {
  Tppn tppn = gtd_[tvpn];
  SSDSIM_CHECK(tppn != kUnmapped);
  const auto& g = bm_.nand().geometry();
  const nand::BlockState& st = bm_.nand().block_state(tppn / g.pages_per_block);
  std::uint32_t page = tppn % g.pages_per_block;
  SSDSIM_CHECK(!st.payloads.empty() && st.payloads[page] != nullptr);
  return *st.payloads[page];
}

}  // namespace ssdsim::ftl

from .codec import CropRect, DecodeStats, decode_crop, decode_full, encode_jpeg

__all__ = ["CropRect", "DecodeStats", "decode_crop", "decode_full", "encode_jpeg"]

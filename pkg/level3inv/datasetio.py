"""Disk storage of datasets.

A dataset directory holds manifest.json and the data table data.csv. The data table may
optionally be compressed as data.csv.zst, which is transparently decompressed on reading.
Floats are written in their shortest round-trip representation so reading gives back the exact
values written.
"""

import csv
import io
import json
import logging
import os
from typing import Sequence, TextIO

import numpy as np

from level3inv import config
from level3inv import dataset
from level3inv.datasetdef import SCHEMA_VERSION, CurveSample, DatasetManifest
from level3inv.devicedef import PARAM_NAMES, DeviceParams
from level3inv.errors import CorruptData, IoError, SchemaMismatch

import zstd


MANIFEST_FILE = 'manifest.json'
DATA_FILE = 'data.csv'
COMPRESS_EXT = '.zst'
CHARSET = 'UTF-8'


def data_header(n_points: int) -> list[str]:
    return (['device_id', 'v_gs'] + [f'i_{i:03d}' for i in range(n_points)]
            + list(PARAM_NAMES))


def manifest_text(manifest: DatasetManifest) -> str:
    return json.dumps(manifest.to_dict(), indent=1, sort_keys=True) + '\n'


def data_text(samples: Sequence[CurveSample], n_points: int) -> str:
    """Format the samples as the data table."""
    f = io.StringIO()
    writer = csv.writer(f, lineterminator='\n')
    writer.writerow(data_header(n_points))
    for s in samples:
        params = s.params.as_dict()
        writer.writerow([str(s.device_id), repr(float(s.v_gs))]
                        + [repr(float(x)) for x in s.raw_currents]
                        + [repr(params[name]) for name in PARAM_NAMES])
    return f.getvalue()


def _remove_if_exists(path: str):
    try:
        os.unlink(path)
    except FileNotFoundError:
        pass


def write_dataset(samples: Sequence[CurveSample], manifest: DatasetManifest, directory: str,
                  compress: bool = False):
    """Write a dataset into a directory, creating it if needed.

    The data table isn't compressed if it's too small for that to be worthwhile.

    Raises:
        IoError: the files could not be written
    """
    data = data_text(samples, manifest.grid.count).encode(CHARSET)
    data_path = os.path.join(directory, DATA_FILE)
    try:
        os.makedirs(directory, exist_ok=True)
        with open(os.path.join(directory, MANIFEST_FILE), 'w', encoding=CHARSET) as f:
            f.write(manifest_text(manifest))
        if compress and len(data) > config.get('compress_threshold_bytes'):
            with open(data_path + COMPRESS_EXT, 'wb') as f:
                f.write(zstd.compress(data))
            _remove_if_exists(data_path)
        else:
            with open(data_path, 'wb') as f:
                f.write(data)
            _remove_if_exists(data_path + COMPRESS_EXT)
    except OSError as e:
        raise IoError(f'Cannot write dataset to {directory}: {e}') from e
    logging.info(f'Wrote {len(samples)} samples to {directory}')


def read_manifest(directory: str) -> DatasetManifest:
    """Read only the manifest of a dataset.

    Raises:
        IoError: the manifest could not be read
        SchemaMismatch: the manifest has an unsupported schema version
        CorruptData: the manifest is malformed
    """
    path = os.path.join(directory, MANIFEST_FILE)
    try:
        with open(path, encoding=CHARSET) as f:
            d = json.load(f)
    except OSError as e:
        raise IoError(f'Cannot read {path}: {e}') from e
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CorruptData(f'Malformed manifest {path}: {e}') from e
    return manifest_from_dict(d, path)


def manifest_from_dict(d: dict, source: str) -> DatasetManifest:
    """Convert a decoded manifest, checking its schema version.

    Raises:
        SchemaMismatch: the manifest has an unsupported schema version
        CorruptData: the manifest is malformed
    """
    if not isinstance(d, dict):
        raise CorruptData(f'Malformed manifest in {source}')
    if d.get('schema_version') != SCHEMA_VERSION:
        raise SchemaMismatch(f'Unsupported schema_version {d.get("schema_version")} in {source}; '
                             f'expected {SCHEMA_VERSION}')
    try:
        manifest = DatasetManifest.from_dict(d)
        manifest.check_splits()
        return manifest
    except (KeyError, ValueError, TypeError) as e:
        raise CorruptData(f'Malformed manifest in {source}: {e}') from e


def open_data_file(directory: str) -> TextIO:
    """Open the data table, decompressing it if it was stored compressed."""
    path = os.path.join(directory, DATA_FILE)
    try:
        with open(path + COMPRESS_EXT, 'rb') as compress_file:
            try:
                return io.StringIO(zstd.decompress(compress_file.read()).decode(CHARSET),
                                   newline='')
            except (zstd.Error, UnicodeDecodeError) as e:
                raise CorruptData(f'Cannot decompress {path + COMPRESS_EXT}: {e}') from e
    except FileNotFoundError:
        return open(path, encoding=CHARSET, newline='')


def _parse_row(row: list[str], lineno: int, manifest: DatasetManifest) -> CurveSample:
    n_points = manifest.grid.count
    if len(row) != 2 + n_points + len(PARAM_NAMES):
        raise CorruptData(f'Data row {lineno} has {len(row)} fields; expected '
                          f'{2 + n_points + len(PARAM_NAMES)}')
    try:
        device_id = int(row[0])
        v_gs = float(row[1])
        currents = [float(x) for x in row[2:2 + n_points]]
        values = [float(x) for x in row[2 + n_points:]]
    except ValueError as e:
        raise CorruptData(f'Bad number in data row {lineno}: {e}') from e
    if not 0 <= device_id < manifest.n_devices or v_gs not in manifest.v_gs_list:
        raise CorruptData(f'Data row {lineno} does not match the manifest')
    params = DeviceParams(**dict(zip(PARAM_NAMES, values)), temperature=manifest.temperature)
    return dataset.make_sample(device_id, v_gs, np.array(currents), params, manifest)


def read_dataset(directory: str) -> tuple[list[CurveSample], DatasetManifest]:
    """Read a dataset written by write_dataset.

    Features are recomputed from the raw currents with the manifest's statistics.

    Raises:
        IoError: the files could not be read
        SchemaMismatch: the manifest has an unsupported schema version
        CorruptData: the data table is malformed or disagrees with the manifest
    """
    manifest = read_manifest(directory)
    if manifest.normalization is None:
        raise CorruptData(f'Manifest in {directory} has no normalization statistics')
    samples = []
    try:
        with open_data_file(directory) as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != data_header(manifest.grid.count):
                raise CorruptData(f'Unexpected data header in {directory}')
            for lineno, row in enumerate(reader, start=2):
                samples.append(_parse_row(row, lineno, manifest))
    except OSError as e:
        raise IoError(f'Cannot read dataset in {directory}: {e}') from e
    except (UnicodeDecodeError, csv.Error) as e:
        raise CorruptData(f'Malformed data table in {directory}: {e}') from e
    if len(samples) != manifest.n_samples:
        raise CorruptData(f'{directory} holds {len(samples)} samples; the manifest expects '
                          f'{manifest.n_samples}')
    dataset.apply_normalization(samples, manifest.normalization)
    logging.info(f'Read {len(samples)} samples from {directory}')
    return samples, manifest

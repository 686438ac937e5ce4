"""File handling utilities for JSON and CSV operations"""

import json
import pandas as pd
from typing import List, Dict, Any, Optional, Union
from pathlib import Path


class FileHandler:
    @staticmethod
    def read_document(file_path: str) -> Dict[str, Any]:
        """Read a JSON file holding a single object (key files, credential files)"""
        with open(file_path, 'r', encoding='utf-8') as f:
            data = json.load(f)
        if not isinstance(data, dict):
            raise ValueError(f"JSON 객체가 아닙니다: {file_path}")
        return data

    @staticmethod
    def write_json(data: Union[List[Dict[str, Any]], Dict[str, Any]], file_path: str) -> None:
        Path(file_path).parent.mkdir(parents=True, exist_ok=True)
        with open(file_path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, ensure_ascii=False, default=str)

    @staticmethod
    def write_csv(data: List[Dict[str, Any]], file_path: str, columns: Optional[List[str]] = None) -> None:
        """Write rows with pandas; with ``columns`` an empty list still gets a header row"""
        if not data and columns is None:
            return

        Path(file_path).parent.mkdir(parents=True, exist_ok=True)
        df = pd.DataFrame(data, columns=columns)
        df.to_csv(file_path, index=False)

    @staticmethod
    def detect_file_type(file_path: str) -> str:
        suffix = Path(file_path).suffix.lower()
        if suffix == '.json':
            return 'json'
        elif suffix == '.csv':
            return 'csv'
        else:
            raise ValueError(f"지원하지 않는 파일 형식: {suffix}. .json과 .csv만 지원됩니다.")

    @staticmethod
    def write_file(data: List[Dict[str, Any]], file_path: str) -> None:
        """Write summary rows as JSON or CSV depending on the extension"""
        file_type = FileHandler.detect_file_type(file_path)
        if file_type == 'json':
            FileHandler.write_json(data, file_path)
        elif file_type == 'csv':
            FileHandler.write_csv(data, file_path)
